//! Configuration-driven experiments over the resource loss model: single
//! points, Cartesian parameter sweeps and demand-law tables, written as
//! versioned CSV.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{ConfigError, DemandKind, ExperimentConfig, MethodSet, TrafficModel};
pub use experiment::{demand_pmf, grid, run_experiment, GridPoint, Method, PmfInfo, ResultRow, RowError, RunOptions};
pub use output::{write_pmf, write_rows, SCHEMA_VERSION};
