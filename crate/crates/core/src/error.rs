use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("degenerate demand distribution: {0}")]
    DegeneratePmf(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Closed-form SPP inversion produced a nonpositive rate.
    #[error("SPP fit infeasible: {parameter} = {value:e} is not strictly positive ({detail})")]
    FitInfeasible { parameter: &'static str, value: f64, detail: String },

    #[error("degenerate system: {0}")]
    DegenerateSystem(String),

    #[error("generator assembly failed: {0}")]
    Assembly(String),

    #[error("singular matrix encountered at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("iterative solver did not converge after {sweeps} sweeps (last residual {last:e})")]
    NotConverged { sweeps: usize, last: f64, residual_history: Vec<f64> },

    #[error("stationary vector has a negative component {value:e} at state {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
