//! Two-state switched Poisson process: statistics and moment fitting.

use serde::{Deserialize, Serialize};

use super::MapProcess;
use crate::linalg::DenseMatrix;
use crate::{Error, Real, Result};

/// Switched Poisson process: Poisson rate `lambda1` or `lambda2`, switching
/// 1→2 at rate `r1` and 2→1 at rate `r2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SppParams<T> {
    pub lambda1: T,
    pub lambda2: T,
    pub r1: T,
    pub r2: T,
}

/// Interarrival law `F(x) = 1 - q e^{-u1 x} - (1-q) e^{-u2 x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H2<T> {
    pub u1: T,
    pub u2: T,
    pub q: T,
}

impl<T: Real> H2<T> {
    pub fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        let tail = self.q * (-self.u1 * x).exp() + (T::one() - self.q) * (-self.u2 * x).exp();
        (T::one() - tail).max(T::zero()).min(T::one())
    }

    pub fn mean(&self) -> T {
        self.q / self.u1 + (T::one() - self.q) / self.u2
    }

    pub fn second_moment(&self) -> T {
        let two = T::of(2.0);
        two * self.q / (self.u1 * self.u1) + two * (T::one() - self.q) / (self.u2 * self.u2)
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.second_moment() - m * m
    }
}

/// Descriptive statistics of an SPP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SppStats<T> {
    /// `E[X]`, s.
    pub mean_interarrival: T,
    /// `λ_A = 1 / E[X]`.
    pub arrival_rate: T,
    /// `σ_A²`, the constant of the autocovariance `K(i) = σ_A² β_A^i`, s².
    pub cov_amplitude: T,
    /// `β_A`, the lag-1 NACF: non-unit eigenvalue of `(-Λ0)^{-1} Λ1`.
    pub lag1_nacf: T,
    pub h2: H2<T>,
    /// `Var(X)` of the interarrival time, s².
    pub interarrival_variance: T,
    /// `sqrt(Var X) / E[X]`.
    pub cov_canonical: T,
}

impl<T: Real> SppStats<T> {
    /// Lag-`i` autocovariance of interarrival times.
    pub fn autocovariance(&self, lag: i32) -> T {
        self.cov_amplitude * self.lag1_nacf.powi(lag)
    }
}

/// How a coefficient-of-variation knob is mapped to `σ_A²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CovConvention {
    /// `σ_A² = c_A λ_A`.
    #[default]
    Paper,
    /// `c_A = sqrt(Var X) / E[X]`; for an SPP `Var X = E[X]² + 2σ_A²`.
    Canonical,
    /// The knob is `σ_A²` itself.
    Amplitude,
}

impl CovConvention {
    pub fn cov_amplitude<T: Real>(self, cov: T, arrival_rate: T) -> Result<T> {
        let amp = match self {
            Self::Paper => cov * arrival_rate,
            Self::Canonical => (cov * cov - T::one()) / (T::of(2.0) * arrival_rate * arrival_rate),
            Self::Amplitude => cov,
        };
        if !(amp >= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "CoV {cov} maps to a negative covariance amplitude under {self:?}"
            )));
        }
        Ok(amp)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Paper => "paper",
            Self::Canonical => "canonical",
            Self::Amplitude => "amplitude",
        }
    }
}

/// Measured moments an SPP is fitted to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SppTarget<T> {
    pub mean_interarrival: T,
    pub cov_amplitude: T,
    pub lag1_nacf: T,
}

impl<T: Real> SppTarget<T> {
    pub fn from_rate(arrival_rate: T, cov: T, convention: CovConvention, lag1_nacf: T) -> Result<Self> {
        if !(arrival_rate > T::zero()) {
            return Err(Error::InvalidArgument(format!("arrival rate {arrival_rate} must be positive")));
        }
        Ok(Self {
            mean_interarrival: T::one() / arrival_rate,
            cov_amplitude: convention.cov_amplitude(cov, arrival_rate)?,
            lag1_nacf,
        })
    }

    pub fn arrival_rate(&self) -> T {
        T::one() / self.mean_interarrival
    }
}

impl<T: Real> SppParams<T> {
    pub fn new(lambda1: T, lambda2: T, r1: T, r2: T) -> Result<Self> {
        for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2), ("r1", r1), ("r2", r2)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("SPP {name} = {v} must be positive")));
            }
        }
        Ok(Self { lambda1, lambda2, r1, r2 })
    }

    pub fn to_map(&self) -> Result<MapProcess<T>> {
        let d1 = DenseMatrix::from_diagonal(&[self.lambda1, self.lambda2]);
        let d0 =
            DenseMatrix::from_rows(&[vec![-self.r1 - self.lambda1, self.r1], vec![self.r2, -self.r2 - self.lambda2]])?;
        MapProcess::new(d0, d1)
    }

    /// Stationary phase distribution `(r2, r1) / (r1 + r2)`.
    pub fn stationary_distribution(&self) -> [T; 2] {
        let s = self.r1 + self.r2;
        [self.r2 / s, self.r1 / s]
    }

    /// Phase distribution at arrival epochs.
    pub fn embedded_distribution(&self) -> [T; 2] {
        let a = self.lambda1 * self.r2;
        let b = self.lambda2 * self.r1;
        [a / (a + b), b / (a + b)]
    }

    pub fn arrival_rate(&self) -> T {
        let th = self.stationary_distribution();
        th[0] * self.lambda1 + th[1] * self.lambda2
    }

    /// Hyperexponential form of the stationary interarrival time.
    pub fn h2(&self) -> H2<T> {
        let (l1, l2, r1, r2) = (self.lambda1, self.lambda2, self.r1, self.r2);
        let two = T::of(2.0);
        let d = l1 - l2 + r1 - r2;
        let delta = (d * d + T::of(4.0) * r1 * r2).sqrt();
        let total = l1 + l2 + r1 + r2;
        let u1 = (total - delta) / two;
        let u2 = (total + delta) / two;
        let q = (l2 * l2 * r1 + l1 * l1 * r2) / ((l2 * r1 + l1 * r2) * (u1 - u2)) - u2 / (u1 - u2);
        H2 { u1, u2, q: q.max(T::zero()).min(T::one()) }
    }

    pub fn moments(&self) -> SppStats<T> {
        let (l1, l2, r1, r2) = (self.lambda1, self.lambda2, self.r1, self.r2);
        let mix = l1 * r2 + l2 * r1;
        let mean = (r1 + r2) / mix;
        let denom = l1 * l2 + l2 * r1 + l1 * r2;
        let dl = l1 - l2;
        let cov_amplitude = dl * dl * r1 * r2 / (mix * mix * denom);
        let lag1_nacf = l1 * l2 / denom;
        let h2 = self.h2();
        let variance = h2.variance().max(T::zero());
        SppStats {
            mean_interarrival: mean,
            arrival_rate: T::one() / mean,
            cov_amplitude,
            lag1_nacf,
            h2,
            interarrival_variance: variance,
            cov_canonical: variance.sqrt() / mean,
        }
    }

    /// Closed-form inversion of `(E[X], σ_A², β_A)` for a chosen `λ2 > 1/E[X]`.
    pub fn fit(target: &SppTarget<T>, lambda2: T) -> Result<Self> {
        let (ex, s2, beta) = (target.mean_interarrival, target.cov_amplitude, target.lag1_nacf);
        if !(ex > T::zero()) {
            return Err(Error::InvalidArgument(format!("mean interarrival {ex} must be positive")));
        }
        if !(beta > T::zero() && beta < T::one()) {
            return Err(Error::InvalidArgument(format!("lag-1 NACF {beta} must lie in (0, 1)")));
        }
        if !(s2 >= T::zero()) {
            return Err(Error::InvalidArgument(format!("covariance amplitude {s2} is negative")));
        }
        if !(lambda2 * ex > T::one()) {
            return Err(Error::Precondition(format!(
                "free rate λ2 = {lambda2} must exceed the mean arrival rate {}",
                T::one() / ex
            )));
        }
        let a = lambda2 * ex - T::one();
        let l2sq = lambda2 * lambda2;
        let den1 = beta * ex * a + lambda2 * s2;
        let den2 = beta * a * a + l2sq * s2;
        let one_minus = T::one() - beta;
        let lambda1 = beta * a / den1;
        let r1 = one_minus * l2sq * s2 * a / (den1 * den2);
        let r2 = one_minus * lambda2 * a * a / den2;
        let detail = || format!("E[X] = {ex}, σ² = {s2}, β = {beta}, λ2 = {lambda2}");
        for (parameter, v) in [("lambda1", lambda1), ("r1", r1), ("r2", r2)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::FitInfeasible { parameter, value: v.as_f64(), detail: detail() });
            }
        }
        Ok(Self { lambda1, lambda2, r1, r2 })
    }

    /// Fits with `lambda2` if feasible, otherwise scans `λ2` geometrically over
    /// `(λ_A, 100 λ_A]` and takes the first feasible value.
    pub fn fit_with_search(target: &SppTarget<T>, lambda2: T) -> Result<Self> {
        let first = match Self::fit(target, lambda2) {
            Ok(p) => return Ok(p),
            Err(e @ Error::FitInfeasible { .. }) | Err(e @ Error::Precondition(_)) => e,
            Err(e) => return Err(e),
        };
        let rate = target.arrival_rate();
        const STEPS: usize = 400;
        let hundred = T::of(100.0);
        (1..=STEPS)
            .map(|i| rate * hundred.powf(T::of_usize(i) / T::of_usize(STEPS)))
            .find_map(|l2| Self::fit(target, l2).ok())
            .ok_or(first)
    }
}
