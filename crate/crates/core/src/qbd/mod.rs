//! Resource loss system with MAP arrivals as a level-dependent QBD.
//!
//! The process tracks `(sessions k, occupied PRBs r, MAP phase m)`. On a
//! departure the number of released PRBs is drawn from the conditional law
//! `p_j p_{r-j}^{(k-1)} / p_r^{(k)}` instead of tracking every session.

mod generator;
mod solve;
mod space;

pub use generator::{assemble_generator, Generator, LevelBlocks, Link};
pub use solve::{solve_stationary, GaussSeidelOptions, QbdSolution, SolveMethod, SolverTag};
pub use space::{convolve_demands, ConvolutionTable, StateSpace};

use crate::radio::DemandPmf;
use crate::traffic::MapProcess;
use crate::{Error, Real, Result};

#[derive(Debug, Clone)]
pub struct SystemConfig<T> {
    /// `N`
    pub servers: usize,
    /// `R`
    pub prbs: usize,
    /// `μ`, 1/s
    pub service_rate: T,
    pub pmf: DemandPmf<T>,
    pub map: MapProcess<T>,
}

impl<T: Real> SystemConfig<T> {
    pub fn new(servers: usize, prbs: usize, service_rate: T, pmf: DemandPmf<T>, map: MapProcess<T>) -> Result<Self> {
        let cfg = Self { servers, prbs, service_rate, pmf, map };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.servers < 1 {
            return Err(Error::InvalidArgument("at least one server required".into()));
        }
        if self.prbs < 1 {
            return Err(Error::InvalidArgument("at least one PRB required".into()));
        }
        if !(self.service_rate > T::zero()) || !self.service_rate.is_finite() {
            return Err(Error::InvalidArgument(format!("service rate {} must be positive", self.service_rate)));
        }
        Ok(())
    }
}

/// Probability that an arriving session is dropped.
pub fn loss_probability<T: Real>(sol: &QbdSolution<T>, cfg: &SystemConfig<T>, space: &StateSpace<T>) -> T {
    let rates = cfg.map.phase_arrival_rates();
    let mut admitted = T::zero();
    let top = space.top_level().min(cfg.servers.saturating_sub(1));
    for k in 0..=top {
        for &r in space.level(k) {
            let fits = cfg.pmf.cdf(cfg.prbs - r);
            if fits == T::zero() {
                continue;
            }
            let q = sol.q(space, k, r).expect("state present");
            let flow: T = q.iter().zip(&rates).map(|(&a, &b)| a * b).sum();
            admitted = admitted + flow * fits;
        }
    }
    (T::one() - admitted / cfg.map.arrival_rate()).max(T::zero()).min(T::one())
}

/// Mean occupied PRBs divided by `R`.
pub fn utilization<T: Real>(sol: &QbdSolution<T>, cfg: &SystemConfig<T>, space: &StateSpace<T>) -> T {
    (mean_occupied_prbs(sol, space) / T::of_usize(cfg.prbs)).max(T::zero()).min(T::one())
}

pub fn mean_occupied_prbs<T: Real>(sol: &QbdSolution<T>, space: &StateSpace<T>) -> T {
    let mut acc = T::zero();
    for k in 1..sol.level_count() {
        for &r in space.level(k) {
            let mass: T = sol.q(space, k, r).expect("state present").iter().copied().sum();
            acc = acc + T::of_usize(r) * mass;
        }
    }
    acc
}

pub fn mean_sessions<T: Real>(sol: &QbdSolution<T>) -> T {
    (1..sol.level_count()).map(|k| T::of_usize(k) * sol.level(k).iter().copied().sum::<T>()).sum()
}

/// Mean demand of admitted sessions, from the stationary admission flow.
pub fn admitted_mean_demand<T: Real>(sol: &QbdSolution<T>, cfg: &SystemConfig<T>, space: &StateSpace<T>) -> T {
    let rates = cfg.map.phase_arrival_rates();
    let (mut flow, mut prbs) = (T::zero(), T::zero());
    let top = space.top_level().min(cfg.servers.saturating_sub(1));
    for k in 0..=top {
        for &r in space.level(k) {
            let q = sol.q(space, k, r).expect("state present");
            let arrivals: T = q.iter().zip(&rates).map(|(&a, &b)| a * b).sum();
            for (j, p) in cfg.pmf.support().take_while(|&(j, _)| r + j <= cfg.prbs) {
                flow = flow + arrivals * p;
                prbs = prbs + arrivals * p * T::of_usize(j);
            }
        }
    }
    if flow > T::zero() {
        prbs / flow
    } else {
        T::zero()
    }
}

/// How a metric was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsSource {
    Analytic,
    Simulated,
}

impl MetricsSource {
    pub fn name(self) -> &'static str {
        match self {
            Self::Analytic => "analytic",
            Self::Simulated => "sim",
        }
    }
}

/// Session loss probability and resource utilization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics<T> {
    pub loss_probability: T,
    pub utilization: T,
    pub source: MetricsSource,
    /// 95% half-widths, simulated metrics only.
    pub loss_half_width: Option<T>,
    pub utilization_half_width: Option<T>,
}

/// Everything produced by one analytic evaluation.
#[derive(Debug, Clone)]
pub struct Analysis<T> {
    pub space: StateSpace<T>,
    pub solution: QbdSolution<T>,
    pub metrics: Metrics<T>,
}

/// Builds, assembles and solves the model, then evaluates the metrics.
pub fn analyze<T: Real>(cfg: &SystemConfig<T>, method: SolveMethod) -> Result<Analysis<T>> {
    cfg.validate()?;
    let space = StateSpace::build(cfg)?;
    let gen = assemble_generator(cfg, &space)?;
    let solution = solve_stationary(&gen, method)?;
    let metrics = Metrics {
        loss_probability: loss_probability(&solution, cfg, &space),
        utilization: utilization(&solution, cfg, &space),
        source: MetricsSource::Analytic,
        loss_half_width: None,
        utilization_half_width: None,
    };
    Ok(Analysis { space, solution, metrics })
}
