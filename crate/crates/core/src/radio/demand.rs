use crate::{Error, Real, Result};

/// Distribution of the number of PRBs requested by one session.
///
/// `p(j)` is defined for `j >= 1`; `p(0)` is always zero. Atoms above the
/// system PRB pool are kept: such sessions can never be admitted.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandPmf<T> {
    probs: Vec<T>,
    outage_mass: T,
}

impl<T: Real> DemandPmf<T> {
    /// `probs[j]` is the probability of requesting `j` PRBs. Must sum to one.
    pub fn new(mut probs: Vec<T>) -> Result<Self> {
        validate_weights(&probs)?;
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > T::tol(1e-9) {
            return Err(Error::InvalidArgument(format!("demand probabilities sum to {total}, expected 1")));
        }
        renormalize(&mut probs, total);
        Ok(Self { probs, outage_mass: T::zero() })
    }

    /// Normalizes nonnegative weights indexed by demand into a PMF.
    pub fn from_weights(mut weights: Vec<T>) -> Result<Self> {
        validate_weights(&weights)?;
        let total: T = weights.iter().copied().sum();
        if total <= T::zero() {
            return Err(Error::DegeneratePmf("all weights are zero".into()));
        }
        renormalize(&mut weights, total);
        Ok(Self { probs: weights, outage_mass: T::zero() })
    }

    /// Builds a PMF from `(demand, weight)` atoms; weights are normalized.
    pub fn from_atoms(atoms: &[(usize, T)]) -> Result<Self> {
        let j_max = atoms.iter().map(|a| a.0).max().unwrap_or(0);
        let mut w = vec![T::zero(); j_max + 1];
        for &(j, p) in atoms {
            if j >= w.len() {
                continue;
            }
            w[j] = w[j] + p;
        }
        Self::from_weights(w)
    }

    /// Unit mass at `j`.
    pub fn deterministic(j: usize) -> Result<Self> {
        Self::from_atoms(&[(j, T::one())])
    }

    /// Geometric law on `{1, 2, ...}` with the given mean, truncated where the
    /// remaining tail drops below `tail` and renormalized.
    pub fn geometric(mean: T, tail: T) -> Result<Self> {
        if mean < T::one() {
            return Err(Error::InvalidArgument(format!("geometric mean demand {mean} below one PRB")));
        }
        if mean == T::one() {
            return Self::deterministic(1);
        }
        let success = T::one() / mean;
        let fail = T::one() - success;
        let mut w = vec![T::zero()];
        let mut survive = T::one();
        while survive > tail && w.len() < 1_000_000 {
            w.push(success * survive);
            survive = survive * fail;
        }
        Self::from_weights(w)
    }

    pub(crate) fn with_outage(mut self, outage_mass: T) -> Self {
        self.outage_mass = outage_mass;
        self
    }

    /// Probability of requesting exactly `j` PRBs.
    #[inline]
    pub fn p(&self, j: usize) -> T {
        self.probs.get(j).copied().unwrap_or_else(T::zero)
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// Mass of the SINR distribution that fell below the lowest CQI threshold
    /// before renormalization. Zero for PMFs not derived from a radio model.
    pub fn outage_mass(&self) -> T {
        self.outage_mass
    }

    /// Largest demand with positive probability.
    pub fn j_max(&self) -> usize {
        self.probs.iter().rposition(|&p| p > T::zero()).unwrap_or(0)
    }

    /// `(j, p_j)` for every atom with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.probs.iter().enumerate().filter(|(_, &p)| p > T::zero()).map(|(j, &p)| (j, p))
    }

    pub fn total_mass(&self) -> T {
        self.probs.iter().copied().sum()
    }

    pub fn mean(&self) -> T {
        self.support().map(|(j, p)| T::of_usize(j) * p).sum()
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.support()
            .map(|(j, p)| {
                let d = T::of_usize(j) - m;
                d * d * p
            })
            .sum()
    }

    /// Probability that a demand fits into `free` PRBs.
    pub fn cdf(&self, free: usize) -> T {
        self.probs.iter().take(free + 1).copied().sum()
    }

    /// Probability of demands larger than `prbs`, i.e. never admissible.
    pub fn mass_above(&self, prbs: usize) -> T {
        self.probs.iter().skip(prbs + 1).copied().sum()
    }
}

fn validate_weights<T: Real>(w: &[T]) -> Result<()> {
    if let Some(&p0) = w.first() {
        if p0 != T::zero() {
            return Err(Error::InvalidArgument("demand support starts at one PRB (p_0 must be 0)".into()));
        }
    }
    if let Some((j, p)) = w.iter().enumerate().find(|(_, p)| !(**p >= T::zero()) || !p.is_finite()) {
        return Err(Error::InvalidArgument(format!("demand probability at j = {j} is {p}")));
    }
    if w.len() < 2 {
        return Err(Error::DegeneratePmf("empty demand support".into()));
    }
    Ok(())
}

fn renormalize<T: Real>(w: &mut Vec<T>, total: T) {
    for p in w.iter_mut() {
        *p = *p / total;
    }
    while w.len() > 2 && w.last() == Some(&T::zero()) {
        w.pop();
    }
}
