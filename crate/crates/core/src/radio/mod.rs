//! Radio parameterization: blockage, propagation, antenna gains, coverage
//! radius, SINR distribution and the per-session PRB demand it induces.
//!
//! The UE is uniformly located in the disk of radius `r_C` around the BS.
//! Blockage is a two-state mixture weighted by the disk-averaged blockage
//! probability, and interference and fading enter as dB margins on the noise
//! floor.

mod demand;
mod mcs;

use serde::{Deserialize, Serialize};

pub use demand::DemandPmf;
pub use mcs::{McsRow, McsTable};

use crate::quad::adaptive_simpson;
use crate::{Error, Real, Result};

const QUAD_TOL: f64 = 1e-9;

/// Link state of the direct path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkState {
    Clear,
    Blocked,
}

/// Radio and environment parameters. `Default` is the reference 28 GHz
/// deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig<T> {
    pub carrier_ghz: T,
    pub bandwidth_hz: T,
    pub tx_power_w: T,
    pub bs_height_m: T,
    pub ue_height_m: T,
    pub blocker_height_m: T,
    pub blocker_radius_m: T,
    /// Blockers per m².
    pub blocker_density: T,
    /// Documentation only: blockage here is static.
    pub blocker_speed_mps: T,
    /// Documentation only: blockage here is static.
    pub blocker_run_time_s: T,
    pub pathloss_exponent: T,
    pub clear_attenuation_db: T,
    pub blocked_attenuation_db: T,
    pub noise_psd_dbm_hz: T,
    pub interference_margin_db: T,
    pub fast_fading_margin_db: T,
    pub shadow_fading_margin_db: T,
    pub outage_sinr_db: T,
    pub bs_elements_h: usize,
    pub bs_elements_v: usize,
    pub ue_elements_h: usize,
    pub ue_elements_v: usize,
    pub prb_bandwidth_hz: T,
}

impl<T: Real> Default for RadioConfig<T> {
    fn default() -> Self {
        Self {
            carrier_ghz: T::of(28.0),
            bandwidth_hz: T::of(100e6),
            tx_power_w: T::of(2.0),
            bs_height_m: T::of(10.0),
            ue_height_m: T::of(1.5),
            blocker_height_m: T::of(1.7),
            blocker_radius_m: T::of(0.4),
            blocker_density: T::of(0.04),
            blocker_speed_mps: T::of(1.0),
            blocker_run_time_s: T::of(5.0),
            pathloss_exponent: T::of(2.1),
            clear_attenuation_db: T::zero(),
            blocked_attenuation_db: T::of(15.0),
            noise_psd_dbm_hz: T::of(-174.0),
            interference_margin_db: T::of(3.0),
            fast_fading_margin_db: T::of(3.0),
            shadow_fading_margin_db: T::of(3.0),
            outage_sinr_db: T::of(-9.47),
            bs_elements_h: 16,
            bs_elements_v: 16,
            ue_elements_h: 4,
            ue_elements_v: 4,
            // 12 subcarriers at 120 kHz
            prb_bandwidth_hz: T::of(1.44e6),
        }
    }
}

/// Average gain over the half-power beamwidth of an `n`-element linear array,
/// with the HPBW approximated as `102° / n` around broadside.
pub fn array_gain<T: Real>(n: usize) -> Result<T> {
    if n < 1 {
        return Err(Error::InvalidArgument("array needs at least one element".into()));
    }
    if n == 1 {
        return Ok(T::one());
    }
    let nf = T::of_usize(n);
    let pi = T::of(std::f64::consts::PI);
    let two = T::of(2.0);
    let half = (T::of(102.0) / nf).to_radians() / two;
    let broadside = pi / two;
    let ratio = |theta: T| {
        let x = pi * theta.cos() / two;
        let den = x.sin();
        if den.abs() < T::epsilon() {
            nf
        } else {
            (nf * x).sin() / den
        }
    };
    let integral = adaptive_simpson(ratio, broadside - half, broadside + half, T::of(QUAD_TOL));
    Ok(integral / (two * half))
}

fn db_to_linear<T: Real>(db: T) -> T {
    T::of(10.0).powf(db / T::of(10.0))
}

impl<T: Real> RadioConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.ue_height_m > T::zero()
            && self.blocker_height_m > self.ue_height_m
            && self.bs_height_m > self.blocker_height_m)
        {
            return bad("heights must satisfy h_A > h_B > h_U > 0");
        }
        if !(self.bandwidth_hz > T::zero()) {
            return bad("bandwidth must be positive");
        }
        if !(self.prb_bandwidth_hz > T::zero() && self.prb_bandwidth_hz <= self.bandwidth_hz) {
            return bad("PRB bandwidth must be in (0, B]");
        }
        if !(self.pathloss_exponent > T::zero()) {
            return bad("path-loss exponent must be positive");
        }
        if !(self.blocker_density >= T::zero() && self.blocker_radius_m >= T::zero()) {
            return bad("blocker density and radius must be nonnegative");
        }
        if !(self.interference_margin_db >= T::zero()
            && self.fast_fading_margin_db >= T::zero()
            && self.shadow_fading_margin_db >= T::zero())
        {
            return bad("margins must be nonnegative (dB)");
        }
        if !(self.tx_power_w > T::zero() && self.carrier_ghz > T::zero()) {
            return bad("transmit power and carrier frequency must be positive");
        }
        if self.bs_elements_h == 0 || self.bs_elements_v == 0 || self.ue_elements_h == 0 || self.ue_elements_v == 0 {
            return bad("antenna arrays need at least one element per plane");
        }
        Ok(())
    }

    /// `h_A - h_U`, the minimum 3D distance.
    pub fn height_gap(&self) -> T {
        self.bs_height_m - self.ue_height_m
    }

    /// Probability that the LoS to a UE at 2D distance `r` is blocked by a body.
    pub fn blockage_probability(&self, r: T) -> Result<T> {
        if !(r >= T::zero()) {
            return Err(Error::InvalidArgument(format!("distance {r} is negative")));
        }
        Ok(self.blockage_unchecked(r))
    }

    fn blockage_unchecked(&self, r: T) -> T {
        let slope = (self.blocker_height_m - self.ue_height_m) / self.height_gap();
        let exponent = T::of(2.0) * self.blocker_density * self.blocker_radius_m * (r * slope + self.blocker_radius_m);
        -(-exponent).exp_m1()
    }

    /// Blockage probability averaged over a UE uniform in the disk of radius `r_c`.
    pub fn mean_blockage_probability(&self, r_c: T) -> Result<T> {
        if !(r_c > T::zero()) {
            return Err(Error::InvalidArgument(format!("cell radius {r_c} must be positive")));
        }
        let two = T::of(2.0);
        let rc2 = r_c * r_c;
        let v = adaptive_simpson(|r: T| self.blockage_unchecked(r) * two * r / rc2, T::zero(), r_c, T::of(QUAD_TOL));
        Ok(v.max(T::zero()).min(T::one()))
    }

    /// UMi path loss (dB) at 3D distance `y`.
    pub fn path_loss_db(&self, y: T, state: LinkState) -> Result<T> {
        if !(y > T::zero()) {
            return Err(Error::InvalidArgument(format!("3D distance {y} must be positive")));
        }
        let ten = T::of(10.0);
        Ok(T::of(32.4)
            + self.attenuation_db(state)
            + ten * self.pathloss_exponent * y.log10()
            + T::of(20.0) * self.carrier_ghz.log10())
    }

    fn attenuation_db(&self, state: LinkState) -> T {
        match state {
            LinkState::Clear => self.clear_attenuation_db,
            LinkState::Blocked => self.blocked_attenuation_db,
        }
    }

    /// Planar BS array gain, product of the two per-plane gains.
    pub fn bs_gain(&self) -> Result<T> {
        Ok(array_gain::<T>(self.bs_elements_h)? * array_gain::<T>(self.bs_elements_v)?)
    }

    pub fn ue_gain(&self) -> Result<T> {
        Ok(array_gain::<T>(self.ue_elements_h)? * array_gain::<T>(self.ue_elements_v)?)
    }

    /// Noise power over the channel bandwidth with all margins applied, W.
    pub fn effective_noise_w(&self) -> T {
        let margins = self.interference_margin_db + self.fast_fading_margin_db + self.shadow_fading_margin_db;
        db_to_linear(self.noise_psd_dbm_hz - T::of(30.0)) * self.bandwidth_hz * db_to_linear(margins)
    }

    /// Precomputes the distance-independent SINR constants.
    pub fn link_budget(&self) -> Result<LinkBudget<T>> {
        self.validate()?;
        let gains = self.tx_power_w * self.bs_gain()? * self.ue_gain()?;
        let noise = self.effective_noise_w();
        let freq = self.carrier_ghz.powi(-2);
        let constant = |state| gains * db_to_linear(-(T::of(32.4) + self.attenuation_db(state))) * freq / noise;
        Ok(LinkBudget {
            clear: constant(LinkState::Clear),
            blocked: constant(LinkState::Blocked),
            exponent: self.pathloss_exponent,
            height_gap: self.height_gap(),
        })
    }

    /// SINR (dB) of a UE at 2D distance `r`.
    pub fn sinr_db_at_distance(&self, r: T, state: LinkState) -> Result<T> {
        if !(r >= T::zero()) {
            return Err(Error::InvalidArgument(format!("distance {r} is negative")));
        }
        Ok(T::of(10.0) * self.link_budget()?.sinr_at_2d(r, state).log10())
    }

    /// 2D radius at which the blocked-state SINR drops to the outage threshold.
    pub fn coverage_radius(&self) -> Result<T> {
        self.link_budget()?.coverage_radius(db_to_linear(self.outage_sinr_db))
    }

    /// SINR distribution of a UE uniform in the disk of radius `r_c`.
    pub fn sinr_distribution(&self, r_c: T) -> Result<SinrDistribution<T>> {
        let budget = self.link_budget()?;
        let p_block = self.mean_blockage_probability(r_c)?;
        Ok(SinrDistribution::new(budget, r_c, p_block))
    }

    /// CDF of the (linear) SINR at `s` for a cell of radius `r_c`.
    pub fn sinr_cdf(&self, s: T, r_c: T) -> Result<T> {
        if !(s > T::zero()) {
            return Err(Error::InvalidArgument(format!("linear SINR {s} must be positive")));
        }
        Ok(self.sinr_distribution(r_c)?.cdf(s))
    }

    /// PRB demand distribution of a constant-bitrate session of `rate_bps`.
    pub fn demand_pmf(&self, rate_bps: T, mcs: &McsTable<T>) -> Result<DemandPmf<T>> {
        if !(rate_bps > T::zero()) {
            return Err(Error::InvalidArgument(format!("session rate {rate_bps} must be positive")));
        }
        let r_c = self.coverage_radius()?;
        let dist = self.sinr_distribution(r_c)?;
        dist.demand_pmf(rate_bps, self.prb_bandwidth_hz, mcs)
    }
}

/// Distance-independent SINR constants: `SINR_i(y) = A_i y^(-ζ)` at 3D distance `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T> {
    pub clear: T,
    pub blocked: T,
    pub exponent: T,
    pub height_gap: T,
}

impl<T: Real> LinkBudget<T> {
    pub fn constant(&self, state: LinkState) -> T {
        match state {
            LinkState::Clear => self.clear,
            LinkState::Blocked => self.blocked,
        }
    }

    pub fn sinr_at_3d(&self, y: T, state: LinkState) -> T {
        self.constant(state) * y.powf(-self.exponent)
    }

    pub fn sinr_at_2d(&self, r: T, state: LinkState) -> T {
        self.sinr_at_3d(r.hypot(self.height_gap), state)
    }

    /// 3D distance where the blocked SINR equals `threshold` (linear).
    pub fn blocked_reach_3d(&self, threshold: T) -> T {
        (self.blocked / threshold).powf(T::one() / self.exponent)
    }

    pub fn coverage_radius(&self, threshold: T) -> Result<T> {
        let y = self.blocked_reach_3d(threshold);
        if !(y > self.height_gap) {
            return Err(Error::Infeasible(format!(
                "blocked link reaches only {y} m in 3D, below the height gap {} m",
                self.height_gap
            )));
        }
        Ok(((y - self.height_gap) * (y + self.height_gap)).sqrt())
    }
}

/// Mixture SINR law `(1 - p̄_B) F_0 + p̄_B F_1` for a UE uniform in a disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrDistribution<T> {
    budget: LinkBudget<T>,
    radius: T,
    outer_sq: T,
    mean_blockage: T,
}

impl<T: Real> SinrDistribution<T> {
    pub fn new(budget: LinkBudget<T>, radius: T, mean_blockage: T) -> Self {
        Self { budget, radius, outer_sq: radius * radius + budget.height_gap * budget.height_gap, mean_blockage }
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn mean_blockage(&self) -> T {
        self.mean_blockage
    }

    pub fn budget(&self) -> &LinkBudget<T> {
        &self.budget
    }

    /// Support `[A/Q^ζ, A/(h_A-h_U)^ζ]` of one branch.
    pub fn support(&self, state: LinkState) -> (T, T) {
        let a = self.budget.constant(state);
        let z = self.budget.exponent;
        let q = self.outer_sq.sqrt();
        (a / q.powf(z), a / self.budget.height_gap.powf(z))
    }

    /// Conditional CDF given the link state.
    pub fn branch_cdf(&self, s: T, state: LinkState) -> T {
        let (lo, hi) = self.support(state);
        if s < lo {
            return T::zero();
        }
        if s >= hi {
            return T::one();
        }
        let a = self.budget.constant(state);
        let y2 = (a / s).powf(T::of(2.0) / self.budget.exponent);
        ((self.outer_sq - y2) / (self.radius * self.radius)).max(T::zero()).min(T::one())
    }

    pub fn cdf(&self, s: T) -> T {
        let pb = self.mean_blockage;
        (T::one() - pb) * self.branch_cdf(s, LinkState::Clear) + pb * self.branch_cdf(s, LinkState::Blocked)
    }

    /// Discretizes the SINR law by MCS row into a PRB demand PMF.
    pub fn demand_pmf(&self, rate_bps: T, prb_bandwidth_hz: T, mcs: &McsTable<T>) -> Result<DemandPmf<T>> {
        let rows = mcs.rows();
        let cdf_at = |db: T| self.cdf(db_to_linear(db));
        let outage = cdf_at(rows[0].sinr_db);
        let mut weights: Vec<T> = vec![T::zero()];
        for (m, row) in rows.iter().enumerate() {
            let lower = cdf_at(row.sinr_db);
            let upper = rows.get(m + 1).map_or(T::one(), |next| cdf_at(next.sinr_db));
            let mass = (upper - lower).max(T::zero());
            let per_prb = row.spectral_efficiency * prb_bandwidth_hz;
            let j = (rate_bps / per_prb).ceil().to_usize().unwrap_or(usize::MAX).max(1);
            if j >= weights.len() {
                weights.resize(j + 1, T::zero());
            }
            weights[j] = weights[j] + mass;
        }
        let served: T = weights.iter().copied().sum();
        if !(served > T::epsilon()) {
            return Err(Error::DegeneratePmf(format!("all SINR mass is in outage (outage mass {outage})")));
        }
        Ok(DemandPmf::from_weights(weights)?.with_outage(outage))
    }
}
