use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use relq_core::linalg::DenseMatrix;
use relq_core::{
    analyze, CovConvention, DemandPmfF64, Error, MapProcessF64, McsTableF64, RadioConfigF64, SolveMethod, SppParamsF64,
    SppTarget, SystemConfig,
};
use relq_sim::{simulate, Horizon, SimConfig};

use crate::config::{ConfigError, DemandKind, ExperimentConfig, MethodSet, TrafficModel};

/// Truncation mass for geometric demand laws.
const GEOMETRIC_TAIL: f64 = 1e-12;

/// One point of the Cartesian sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub model: TrafficModel,
    pub rate_mbps: f64,
    pub lambda_b: f64,
    pub lambda_a: f64,
    pub beta_a: f64,
    pub cov: f64,
    pub mu: f64,
}

/// Grid in row-major order over model, rate, blocker density, arrival rate,
/// NACF, CoV and service rate.
pub fn grid(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    let sw = &cfg.sweep;
    let or = |axis: &Vec<f64>, base: f64| if axis.is_empty() { vec![base] } else { axis.clone() };
    let models = if sw.model.is_empty() { vec![cfg.traffic.model] } else { sw.model.clone() };
    let rates = or(&sw.rate_mbps, cfg.demand.rate_mbps);
    let densities = or(&sw.lambda_b, cfg.radio.blocker_density);
    let lambdas = or(&sw.lambda_a, cfg.traffic.lambda_a);
    let betas = or(&sw.beta_a, cfg.traffic.beta_a);
    let covs = or(&sw.cov, cfg.traffic.cov);
    let mus = or(&sw.mu, cfg.system.service_rate);

    let mut out = Vec::new();
    for &model in &models {
        for &rate_mbps in &rates {
            for &lambda_b in &densities {
                for &lambda_a in &lambdas {
                    for &beta_a in &betas {
                        for &cov in &covs {
                            for &mu in &mus {
                                out.push(GridPoint {
                                    index: out.len(),
                                    model,
                                    rate_mbps,
                                    lambda_b,
                                    lambda_a,
                                    beta_a,
                                    cov,
                                    mu,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// A demand law with the radio quantities it came from.
#[derive(Debug, Clone)]
pub struct PmfInfo {
    pub pmf: DemandPmfF64,
    pub coverage_radius: Option<f64>,
    pub mean_blockage: Option<f64>,
}

type PmfCache = HashMap<String, Result<Arc<PmfInfo>, RowError>>;

fn radio_at(cfg: &ExperimentConfig, lambda_b: f64) -> RadioConfigF64 {
    RadioConfigF64 { blocker_density: lambda_b, ..cfg.radio.clone() }
}

fn mcs_table(cfg: &ExperimentConfig) -> Result<McsTableF64, ConfigError> {
    match &cfg.demand.mcs_table {
        None => Ok(McsTableF64::default()),
        Some(path) => {
            McsTableF64::from_csv_path(path).map_err(|e| ConfigError::Invalid(format!("demand.mcs_table {path}: {e}")))
        }
    }
}

fn radio_pmf(radio: &RadioConfigF64, rate_mbps: f64, mcs: &McsTableF64) -> relq_core::Result<PmfInfo> {
    let r_c = radio.coverage_radius()?;
    Ok(PmfInfo {
        pmf: radio.demand_pmf(rate_mbps * 1e6, mcs)?,
        coverage_radius: Some(r_c),
        mean_blockage: Some(radio.mean_blockage_probability(r_c)?),
    })
}

/// Demand law for the given rate and blocker density.
pub fn demand_pmf(
    cfg: &ExperimentConfig,
    rate_mbps: f64,
    lambda_b: f64,
    mcs: &McsTableF64,
) -> relq_core::Result<PmfInfo> {
    let d = &cfg.demand;
    match d.kind {
        DemandKind::Radio => radio_pmf(&radio_at(cfg, lambda_b), rate_mbps, mcs),
        DemandKind::Geometric => {
            let mean = match d.mean {
                Some(m) => m,
                None => radio_pmf(&radio_at(cfg, lambda_b), rate_mbps, mcs)?.pmf.mean(),
            };
            Ok(PmfInfo {
                pmf: DemandPmfF64::geometric(mean, GEOMETRIC_TAIL)?,
                coverage_radius: None,
                mean_blockage: None,
            })
        }
        DemandKind::Explicit => Ok(PmfInfo {
            pmf: DemandPmfF64::from_atoms(d.atoms.as_deref().unwrap_or_default())?,
            coverage_radius: None,
            mean_blockage: None,
        }),
    }
}

// Only the radio parameters, rate and demand section enter the key, so
// traffic and service-rate axes reuse one entry.
fn cache_key(cfg: &ExperimentConfig, p: &GridPoint) -> String {
    let d = &cfg.demand;
    match d.kind {
        DemandKind::Explicit => format!("explicit|{:?}", d.atoms),
        _ => format!("{:?}|{:?}|{:?}|{}", d.kind, d.mean, radio_at(cfg, p.lambda_b), p.rate_mbps),
    }
}

fn build_map(cfg: &ExperimentConfig, p: &GridPoint) -> relq_core::Result<(MapProcessF64, Option<SppParamsF64>)> {
    let t = &cfg.traffic;
    match p.model {
        TrafficModel::Poisson => Ok((MapProcessF64::poisson(p.lambda_a)?, None)),
        TrafficModel::Spp => {
            let target = SppTarget::from_rate(p.lambda_a, p.cov, t.cov_convention, p.beta_a)?;
            let lambda2 = t.lambda_2.unwrap_or(5.0 * p.lambda_a);
            let spp = if t.lambda_2_search {
                SppParamsF64::fit_with_search(&target, lambda2)?
            } else {
                SppParamsF64::fit(&target, lambda2)?
            };
            Ok((spp.to_map()?, Some(spp)))
        }
        TrafficModel::Map => {
            let rows = |m: &Option<Vec<Vec<f64>>>| DenseMatrix::from_rows(m.as_deref().unwrap_or_default());
            let raw = MapProcessF64::new(rows(&t.d0)?, rows(&t.d1)?)?;
            if cfg.sweep.lambda_a.is_empty() {
                return Ok((raw, None));
            }
            // Time scaling keeps the correlation structure and sets the rate.
            let s = p.lambda_a / raw.arrival_rate();
            let scale = |m: &DenseMatrix<f64>| {
                let rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| m.row(i).iter().map(|v| v * s).collect()).collect();
                DenseMatrix::from_rows(&rows)
            };
            Ok((MapProcessF64::new(scale(raw.lambda0())?, scale(raw.lambda1())?)?, None))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    Sim,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Analytic => "analytic",
            Self::Sim => "sim",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub point: GridPoint,
    pub cov_convention: CovConvention,
    pub servers: usize,
    pub prbs: usize,
    pub method: Method,
    /// On error the metric fields are empty.
    pub status: Result<(), RowError>,
    pub loss_prob: Option<f64>,
    pub utilization: Option<f64>,
    pub loss_half_width: Option<f64>,
    pub utilization_half_width: Option<f64>,
    /// Normalized residual of the stationary solve.
    pub residual: Option<f64>,
    pub solver: Option<String>,
    pub mean_demand: Option<f64>,
    pub spp: Option<SppParamsF64>,
    pub wall_time_ms: Option<f64>,
}

impl ResultRow {
    fn empty(cfg: &ExperimentConfig, point: GridPoint, method: Method) -> Self {
        Self {
            point,
            cov_convention: cfg.traffic.cov_convention,
            servers: cfg.system.servers(),
            prbs: cfg.system.prbs,
            method,
            status: Ok(()),
            loss_prob: None,
            utilization: None,
            loss_half_width: None,
            utilization_half_width: None,
            residual: None,
            solver: None,
            mean_demand: None,
            spp: None,
            wall_time_ms: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status.is_ok()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Overrides the configured method set.
    pub method: Option<MethodSet>,
    /// Overrides `sim.seed`.
    pub seed: Option<u64>,
    /// Worker threads; the global pool when unset.
    pub jobs: Option<usize>,
    /// Fill `wall_time_ms`. Off by default so reruns are byte-identical.
    pub timing: bool,
}

/// Evaluates every grid point with every selected method. Per-point failures
/// become error rows; only problems with the configuration itself abort.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<ResultRow>, ConfigError> {
    cfg.validate()?;
    let mcs = mcs_table(cfg)?;
    let points = grid(cfg);

    let mut cache = PmfCache::new();
    for p in &points {
        cache
            .entry(cache_key(cfg, p))
            .or_insert_with(|| demand_pmf(cfg, p.rate_mbps, p.lambda_b, &mcs).map(Arc::new).map_err(RowError::from));
    }

    let methods = opts.method.unwrap_or(cfg.output.method);
    let run =
        || points.par_iter().map(|p| evaluate(cfg, opts, methods, p, &cache[&cache_key(cfg, p)])).collect::<Vec<_>>();
    let rows = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ConfigError::Invalid(format!("--jobs {n}: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(rows.into_iter().flatten().collect())
}

fn evaluate(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    methods: MethodSet,
    p: &GridPoint,
    pmf: &Result<Arc<PmfInfo>, RowError>,
) -> Vec<ResultRow> {
    let selected: Vec<Method> = [(methods.analytic(), Method::Analytic), (methods.sim(), Method::Sim)]
        .into_iter()
        .filter_map(|(on, m)| on.then_some(m))
        .collect();

    let prepared = pmf.clone().and_then(|info| {
        let (map, spp) = build_map(cfg, p)?;
        let system = SystemConfig::new(cfg.system.servers(), cfg.system.prbs, p.mu, info.pmf.clone(), map)?;
        Ok((system, spp))
    });

    selected
        .into_iter()
        .map(|method| {
            let mut row = ResultRow::empty(cfg, *p, method);
            let (system, spp) = match &prepared {
                Ok(v) => v,
                Err(e) => {
                    row.status = Err(e.clone());
                    return row;
                }
            };
            row.spp = *spp;
            row.mean_demand = Some(system.pmf.mean());
            let start = Instant::now();
            let outcome: relq_core::Result<()> = match method {
                Method::Analytic => analyze(system, SolveMethod::Auto).map(|a| {
                    row.loss_prob = Some(a.metrics.loss_probability);
                    row.utilization = Some(a.metrics.utilization);
                    row.residual = Some(a.solution.residual);
                    row.solver = Some(a.solution.solver.to_string());
                }),
                Method::Sim => {
                    let sim = SimConfig {
                        system: system.clone(),
                        horizon: Horizon::Arrivals(cfg.sim.arrivals),
                        warmup: cfg.sim.warmup,
                        seed: opts.seed.unwrap_or(cfg.sim.seed),
                        replications: cfg.sim.replications,
                    };
                    simulate(&sim).map(|r| {
                        row.loss_prob = Some(r.loss.mean);
                        row.utilization = Some(r.utilization.mean);
                        row.loss_half_width = Some(r.loss.half_width);
                        row.utilization_half_width = Some(r.utilization.half_width);
                    })
                }
            };
            if let Err(e) = outcome {
                row.status = Err(e.into());
            }
            if opts.timing {
                row.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            row
        })
        .collect()
}

/// Why a row has no metrics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub message: String,
    /// The solver or assembly failed, as opposed to inconsistent input.
    pub numerical: bool,
}

impl From<Error> for RowError {
    fn from(e: Error) -> Self {
        let numerical = matches!(
            e,
            Error::Singular { .. }
                | Error::NotConverged { .. }
                | Error::NegativeProbability { .. }
                | Error::Assembly(_)
                | Error::Structural(_)
                | Error::DegenerateSystem(_)
                | Error::DegeneratePmf(_)
        );
        Self { message: e.to_string(), numerical }
    }
}
