use rand::Rng;
use rand_distr::Exp1;

use relq_core::{DemandPmf, MapProcess};

/// Exact sampler of MAP phase events via competing exponential clocks.
#[derive(Debug, Clone)]
pub struct MapSampler {
    /// Total event rate out of each phase, `-Λ0[a][a]`.
    exit: Vec<f64>,
    /// Per phase: cumulative rates of `(target, is_arrival)` outcomes.
    outcomes: Vec<Vec<(f64, usize, bool)>>,
}

impl MapSampler {
    pub fn new(map: &MapProcess<f64>) -> Self {
        let m = map.phases();
        let (d0, d1) = (map.lambda0(), map.lambda1());
        let mut exit = Vec::with_capacity(m);
        let mut outcomes = Vec::with_capacity(m);
        for a in 0..m {
            let mut acc = 0.0;
            let mut list = Vec::new();
            for b in 0..m {
                if b != a && d0[(a, b)] > 0.0 {
                    acc += d0[(a, b)];
                    list.push((acc, b, false));
                }
                if d1[(a, b)] > 0.0 {
                    acc += d1[(a, b)];
                    list.push((acc, b, true));
                }
            }
            exit.push(acc);
            outcomes.push(list);
        }
        Self { exit, outcomes }
    }

    /// Holding time in `phase` before its next event.
    #[inline]
    pub fn holding_time<R: Rng>(&self, rng: &mut R, phase: usize) -> f64 {
        let e: f64 = rng.sample(Exp1);
        e / self.exit[phase]
    }

    /// Next phase and whether the transition carries an arrival.
    #[inline]
    pub fn transition<R: Rng>(&self, rng: &mut R, phase: usize) -> (usize, bool) {
        let list = &self.outcomes[phase];
        if list.len() == 1 {
            return (list[0].1, list[0].2);
        }
        let u = rng.random::<f64>() * self.exit[phase];
        let i = list.partition_point(|o| o.0 <= u).min(list.len() - 1);
        (list[i].1, list[i].2)
    }
}

/// Draws a phase from a probability vector.
pub fn draw_index<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Inverse-CDF sampler of session PRB demands.
#[derive(Debug, Clone)]
pub struct DemandSampler {
    cumulative: Vec<f64>,
    values: Vec<usize>,
}

impl DemandSampler {
    pub fn new(pmf: &DemandPmf<f64>) -> Self {
        let mut acc = 0.0;
        let (mut cumulative, mut values) = (Vec::new(), Vec::new());
        for (j, p) in pmf.support() {
            acc += p;
            cumulative.push(acc);
            values.push(j);
        }
        Self { cumulative, values }
    }

    #[inline]
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.values.len() - 1);
        self.values[i]
    }
}

/// `n` consecutive interarrival times of a MAP in steady state, starting
/// from the phase distribution seen by arrivals.
pub fn interarrival_times<R: Rng>(map: &MapProcess<f64>, n: usize, rng: &mut R) -> Vec<f64> {
    strided_interarrival_times(map, n, 1, rng)
}

/// Every `stride`-th interarrival time of one stationary stream. A stride
/// well beyond the correlation length yields nearly independent draws from
/// the marginal law.
pub fn strided_interarrival_times<R: Rng>(map: &MapProcess<f64>, n: usize, stride: usize, rng: &mut R) -> Vec<f64> {
    let stride = stride.max(1);
    let sampler = MapSampler::new(map);
    let start = map.embedded_distribution().unwrap_or_else(|_| map.stationary_distribution().to_vec());
    let mut phase = draw_index(rng, &start);
    let mut out = Vec::with_capacity(n);
    let (mut gap, mut seen) = (0.0, 0usize);
    while out.len() < n {
        gap += sampler.holding_time(rng, phase);
        let (next, arrival) = sampler.transition(rng, phase);
        phase = next;
        if arrival {
            seen += 1;
            if seen % stride == 0 {
                out.push(gap);
            }
            gap = 0.0;
        }
    }
    out
}
