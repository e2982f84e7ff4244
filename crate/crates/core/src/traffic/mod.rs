//! Markovian arrival processes.

mod spp;

pub use spp::{CovConvention, SppParams, SppStats, SppTarget, H2};

use crate::linalg::{generator_stationary, stochastic_null_vector, DenseMatrix, Lu};
use crate::{Error, Real, Result};

/// A MAP given by `Λ0` (phase transitions without arrival) and `Λ1`
/// (transitions accompanied by an arrival). The phase generator is `Q = Λ0 + Λ1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapProcess<T> {
    d0: DenseMatrix<T>,
    d1: DenseMatrix<T>,
    stationary: Vec<T>,
    rate: T,
}

impl<T: Real> MapProcess<T> {
    pub fn new(d0: DenseMatrix<T>, d1: DenseMatrix<T>) -> Result<Self> {
        let m = d0.rows();
        if m == 0 || !d0.is_square() || !d1.is_square() || d1.rows() != m {
            return Err(Error::InvalidArgument("Λ0 and Λ1 must be square matrices of the same order".into()));
        }
        let scale = d0.max_abs().max(d1.max_abs());
        for i in 0..m {
            for j in 0..m {
                let (a, b) = (d0[(i, j)], d1[(i, j)]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidArgument("non-finite MAP entry".into()));
                }
                if b < T::zero() {
                    return Err(Error::InvalidArgument(format!("Λ1[{i},{j}] = {b} is negative")));
                }
                if i != j && a < T::zero() {
                    return Err(Error::InvalidArgument(format!("Λ0[{i},{j}] = {a} is negative")));
                }
            }
            if !(d0[(i, i)] < T::zero()) {
                return Err(Error::InvalidArgument(format!("Λ0[{i},{i}] = {} must be strictly negative", d0[(i, i)])));
            }
            let sum: T = d0.row(i).iter().chain(d1.row(i)).copied().sum();
            if sum.abs() > T::tol(1e-12) * scale.max(T::one()) {
                return Err(Error::InvalidArgument(format!("row {i} of Λ0 + Λ1 sums to {sum}, not zero")));
            }
        }
        let q = d0.add(&d1);
        let stationary = generator_stationary(&q)?;
        let ones = vec![T::one(); m];
        let rate: T = d1.right_mul(&ones).iter().zip(&stationary).map(|(&a, &b)| a * b).sum();
        if !(rate > T::zero()) {
            return Err(Error::InvalidArgument("MAP has no arrivals (Λ1 = 0)".into()));
        }
        Ok(Self { d0, d1, stationary, rate })
    }

    /// Poisson process as a one-phase MAP.
    pub fn poisson(rate: T) -> Result<Self> {
        if !(rate > T::zero()) {
            return Err(Error::InvalidArgument(format!("Poisson rate {rate} must be positive")));
        }
        Self::new(DenseMatrix::from_diagonal(&[-rate]), DenseMatrix::from_diagonal(&[rate]))
    }

    pub fn phases(&self) -> usize {
        self.d0.rows()
    }

    pub fn lambda0(&self) -> &DenseMatrix<T> {
        &self.d0
    }

    pub fn lambda1(&self) -> &DenseMatrix<T> {
        &self.d1
    }

    /// `Q = Λ0 + Λ1`.
    pub fn generator(&self) -> DenseMatrix<T> {
        self.d0.add(&self.d1)
    }

    /// Stationary distribution `θ` of the phase process.
    pub fn stationary_distribution(&self) -> &[T] {
        &self.stationary
    }

    /// Mean arrival rate `λ_A = θ Λ1 1`.
    pub fn arrival_rate(&self) -> T {
        self.rate
    }

    /// Per-phase arrival intensities `Λ1 1`.
    pub fn phase_arrival_rates(&self) -> Vec<T> {
        self.d1.right_mul(&vec![T::one(); self.phases()])
    }

    /// Phase distribution seen at arrival epochs: the fixed point of `(-Λ0)^{-1} Λ1`.
    pub fn embedded_distribution(&self) -> Result<Vec<T>> {
        let p = self.embedded_transition_matrix()?;
        let m = self.phases();
        let mut a = p;
        for i in 0..m {
            a[(i, i)] = a[(i, i)] - T::one();
        }
        let mut v = stochastic_null_vector(&a)?;
        let total: T = v.iter().copied().sum();
        for x in v.iter_mut() {
            *x = (*x / total).max(T::zero());
        }
        Ok(v)
    }

    /// Stochastic matrix `(-Λ0)^{-1} Λ1` of phases between consecutive arrivals.
    pub fn embedded_transition_matrix(&self) -> Result<DenseMatrix<T>> {
        let m = self.phases();
        let lu = Lu::new(self.d0.scale(-T::one())).map_err(|_| Error::Structural("-Λ0 is singular".into()))?;
        let mut out = DenseMatrix::zeros(m, m);
        for j in 0..m {
            let col: Vec<T> = (0..m).map(|i| self.d1[(i, j)]).collect();
            let x = lu.solve(&col);
            for i in 0..m {
                out[(i, j)] = x[i];
            }
        }
        Ok(out)
    }
}
