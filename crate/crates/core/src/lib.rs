//! Radio-aware session admission model for mmWave cells.
//!
//! Sessions arrive from a Markovian arrival process, each asks for a random
//! number of physical resource blocks derived from a link budget and the CQI
//! table, and is dropped when fewer blocks remain free. The [`qbd`] module
//! computes the stationary loss probability and resource utilization.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar for the common case.

pub mod error;
pub mod linalg;
pub mod qbd;
pub mod quad;
pub mod radio;
mod scalar;
pub mod traffic;

pub use error::{Error, Result};
pub use qbd::{analyze, Analysis, Metrics, MetricsSource, SolveMethod, SystemConfig};
pub use radio::{DemandPmf, LinkState, McsTable, RadioConfig};
pub use scalar::Real;
pub use traffic::{CovConvention, MapProcess, SppParams, SppTarget};

pub type DemandPmfF64 = DemandPmf<f64>;
pub type MapProcessF64 = MapProcess<f64>;
pub type SppParamsF64 = SppParams<f64>;
pub type RadioConfigF64 = RadioConfig<f64>;
pub type SystemConfigF64 = SystemConfig<f64>;
pub type McsTableF64 = McsTable<f64>;

pub type DemandPmfF32 = DemandPmf<f32>;
pub type MapProcessF32 = MapProcess<f32>;
pub type SppParamsF32 = SppParams<f32>;
pub type RadioConfigF32 = RadioConfig<f32>;
pub type SystemConfigF32 = SystemConfig<f32>;
pub type McsTableF32 = McsTable<f32>;
