//! Discrete-event simulation of the resource loss system.
//!
//! Unlike the analytic model, every admitted session keeps its own PRB
//! allocation and releases exactly that amount when it leaves. Arrivals are
//! generated from the MAP phase process directly.

mod engine;
mod sampler;
pub mod stats;
mod trace;

use rayon::prelude::*;

use relq_core::{Error, Metrics, MetricsSource, Result, SystemConfig};

pub use engine::{run_replication, Replication};
pub use sampler::{interarrival_times, strided_interarrival_times, DemandSampler, MapSampler};
pub use stats::Estimate;
pub use trace::{write_trace_csv, EventKind, TraceEvent};

/// Length of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Number of offered arrivals, warmup included.
    Arrivals(u64),
    /// Simulated seconds, warmup included.
    Time(f64),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub system: SystemConfig<f64>,
    pub horizon: Horizon,
    /// Fraction of the horizon discarded before measuring.
    pub warmup: f64,
    pub seed: u64,
    pub replications: usize,
}

impl SimConfig {
    pub fn new(system: SystemConfig<f64>, horizon: Horizon) -> Self {
        Self { system, horizon, warmup: 0.1, seed: 0, replications: 20 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_warmup(mut self, warmup: f64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if !(0.0..1.0).contains(&self.warmup) {
            return Err(Error::InvalidArgument(format!("warmup fraction {} not in [0, 1)", self.warmup)));
        }
        if self.replications < 1 {
            return Err(Error::InvalidArgument("at least one replication required".into()));
        }
        let measured = match self.horizon {
            Horizon::Arrivals(n) => n as f64 - (self.warmup * n as f64).floor(),
            Horizon::Time(t) => {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::InvalidArgument(format!("horizon {t} s must be positive")));
                }
                t * (1.0 - self.warmup) * self.system.map.arrival_rate()
            }
        };
        if !(measured >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon too short: about {measured:.3} arrivals remain after warmup"
            )));
        }
        Ok(())
    }
}

/// Replication statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub loss: Estimate,
    pub utilization: Estimate,
    /// Post-warmup totals over all replications.
    pub offered: u64,
    pub accepted: u64,
    pub replications: Vec<Replication>,
}

impl SimReport {
    pub fn metrics(&self) -> Metrics<f64> {
        Metrics {
            loss_probability: self.loss.mean,
            utilization: self.utilization.mean,
            source: MetricsSource::Simulated,
            loss_half_width: Some(self.loss.half_width),
            utilization_half_width: Some(self.utilization.half_width),
        }
    }
}

/// Runs all replications, in parallel when the thread pool allows, and merges
/// them in replication order.
pub fn simulate(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let reps = (0..cfg.replications)
        .into_par_iter()
        .map(|i| run_replication(cfg, i as u64, None))
        .collect::<Result<Vec<_>>>()?;
    let loss: Vec<f64> = reps.iter().map(|r| r.loss).collect();
    let util: Vec<f64> = reps.iter().map(|r| r.utilization).collect();
    Ok(SimReport {
        loss: Estimate::from_replications(&loss),
        utilization: Estimate::from_replications(&util),
        offered: reps.iter().map(|r| r.offered).sum(),
        accepted: reps.iter().map(|r| r.accepted).sum(),
        replications: reps,
    })
}
