//! Experiment configuration. Every section may be given as a TOML table or as
//! flat dotted keys (`traffic.lambda_a = 0.2`); missing keys take the
//! reference deployment values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use relq_core::{CovConvention, RadioConfigF64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub radio: RadioConfigF64,
    pub traffic: TrafficSection,
    pub demand: DemandSection,
    pub system: SystemSection,
    pub sweep: SweepSection,
    pub sim: SimSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficModel {
    Poisson,
    Spp,
    Map,
}

impl TrafficModel {
    pub fn name(self) -> &'static str {
        match self {
            Self::Poisson => "poisson",
            Self::Spp => "spp",
            Self::Map => "map",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSection {
    pub model: TrafficModel,
    /// Mean arrival rate, sessions/s.
    pub lambda_a: f64,
    pub cov: f64,
    pub cov_convention: CovConvention,
    pub beta_a: f64,
    /// SPP rate of the second state. Defaults to five times `lambda_a`.
    pub lambda_2: Option<f64>,
    /// Retry infeasible fits over a geometric `lambda_2` grid.
    pub lambda_2_search: bool,
    /// Raw MAP matrices for `model = "map"`. A swept `lambda_a` rescales both.
    pub d0: Option<Vec<Vec<f64>>>,
    pub d1: Option<Vec<Vec<f64>>>,
}

impl Default for TrafficSection {
    fn default() -> Self {
        Self {
            model: TrafficModel::Spp,
            lambda_a: 0.1,
            cov: 2.0,
            cov_convention: CovConvention::Paper,
            beta_a: 0.1,
            lambda_2: None,
            lambda_2_search: true,
            d0: None,
            d1: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemandKind {
    /// Derived from the radio link budget and the session rate.
    Radio,
    /// Geometric on `1, 2, ...`; the mean defaults to that of the radio PMF.
    Geometric,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandSection {
    pub kind: DemandKind,
    /// Session rate, Mb/s.
    pub rate_mbps: f64,
    pub mean: Option<f64>,
    /// `[[j, p_j], ...]`, renormalized.
    pub atoms: Option<Vec<(usize, f64)>>,
    /// Optional MCS table CSV replacing the built-in one.
    pub mcs_table: Option<String>,
}

impl Default for DemandSection {
    fn default() -> Self {
        Self { kind: DemandKind::Radio, rate_mbps: 10.0, mean: None, atoms: None, mcs_table: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub prbs: usize,
    /// Defaults to `prbs`.
    pub servers: Option<usize>,
    /// Per-session departure rate, 1/s.
    pub service_rate: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self { prbs: 66, servers: None, service_rate: 1.0 / 30.0 }
    }
}

impl SystemSection {
    pub fn servers(&self) -> usize {
        self.servers.unwrap_or(self.prbs)
    }
}

/// Grid axes. An empty axis is held at the base value; the run covers the
/// Cartesian product of the nonempty ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub model: Vec<TrafficModel>,
    pub rate_mbps: Vec<f64>,
    pub lambda_b: Vec<f64>,
    pub lambda_a: Vec<f64>,
    pub beta_a: Vec<f64>,
    pub cov: Vec<f64>,
    pub mu: Vec<f64>,
}

impl SweepSection {
    /// Drops every axis, leaving the base point.
    pub fn clear(&mut self) {
        *self = Self::default();
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    /// Offered arrivals per replication, warmup included.
    pub arrivals: u64,
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self { arrivals: 1_000_000, warmup: 0.1, replications: 20, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodSet {
    #[default]
    Analytic,
    Sim,
    Both,
}

impl MethodSet {
    pub fn analytic(self) -> bool {
        matches!(self, Self::Analytic | Self::Both)
    }

    pub fn sim(self) -> bool {
        matches!(self, Self::Sim | Self::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub method: MethodSet,
    pub path: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.radio.validate().map_err(|e| ConfigError::Invalid(format!("radio: {e}")))?;

        let t = &self.traffic;
        if !(t.lambda_a > 0.0 && t.lambda_a.is_finite()) {
            return invalid(format!("traffic.lambda_a = {} must be positive", t.lambda_a));
        }
        if !t.cov.is_finite() || !(0.0..1.0).contains(&t.beta_a) {
            return invalid("traffic.cov must be finite and traffic.beta_a in [0, 1)".into());
        }
        if t.model == TrafficModel::Map && (t.d0.is_none() || t.d1.is_none()) {
            return invalid("traffic.model = \"map\" needs traffic.d0 and traffic.d1".into());
        }

        let d = &self.demand;
        if !(d.rate_mbps > 0.0 && d.rate_mbps.is_finite()) {
            return invalid(format!("demand.rate_mbps = {} must be positive", d.rate_mbps));
        }
        if d.kind == DemandKind::Explicit && d.atoms.as_ref().is_none_or(|a| a.is_empty()) {
            return invalid("demand.kind = \"explicit\" needs demand.atoms".into());
        }
        if let Some(m) = d.mean {
            if !(m >= 1.0 && m.is_finite()) {
                return invalid(format!("demand.mean = {m} must be at least 1"));
            }
        }

        let s = &self.system;
        if s.prbs == 0 || s.servers() == 0 {
            return invalid("system.prbs and system.servers must be positive".into());
        }
        if !(s.service_rate > 0.0 && s.service_rate.is_finite()) {
            return invalid(format!("system.service_rate = {} must be positive", s.service_rate));
        }

        let sw = &self.sweep;
        for (name, grid) in [
            ("rate_mbps", &sw.rate_mbps),
            ("lambda_b", &sw.lambda_b),
            ("lambda_a", &sw.lambda_a),
            ("beta_a", &sw.beta_a),
            ("cov", &sw.cov),
            ("mu", &sw.mu),
        ] {
            if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
                return invalid(format!("sweep.{name} contains non-finite value {v}"));
            }
        }
        let radio_axes = !sw.rate_mbps.is_empty() || !sw.lambda_b.is_empty();
        if radio_axes && d.kind == DemandKind::Explicit {
            return invalid("sweeps over rate_mbps or lambda_b need a radio-derived demand".into());
        }

        let sim = &self.sim;
        if sim.arrivals == 0 || sim.replications == 0 || !(0.0..1.0).contains(&sim.warmup) {
            return invalid("sim needs arrivals > 0, replications > 0 and warmup in [0, 1)".into());
        }
        Ok(())
    }
}
