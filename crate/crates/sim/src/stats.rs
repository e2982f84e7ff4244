//! Estimators used to compare simulated samples against model quantities.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Point estimate with a 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
}

impl Estimate {
    /// Student-t interval over independent replications. A single
    /// replication has an unbounded half-width.
    pub fn from_replications(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self { mean, half_width: f64::INFINITY };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom").inverse_cdf(0.975);
        Self { mean, half_width: t * (var / n as f64).sqrt() }
    }

    /// True when `value` lies within `k` half-widths of the estimate.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.half_width
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Sample autocovariance at `lag`, with the global mean.
pub fn autocovariance(x: &[f64], lag: usize) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    lagged_products(x, lag, mean).0
}

fn lagged_products(x: &[f64], lag: usize, mean: f64) -> (f64, usize) {
    let n = x.len().saturating_sub(lag);
    let s: f64 = (0..n).map(|i| (x[i] - mean) * (x[i + lag] - mean)).sum();
    (s / n.max(1) as f64, n)
}

/// Lag autocovariance with its standard error from `batches` batch means.
pub fn autocovariance_with_se(x: &[f64], lag: usize, batches: usize) -> (f64, f64) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let size = x.len() / batches;
    let est: Vec<f64> = (0..batches).map(|b| lagged_products(&x[b * size..(b + 1) * size], lag, mean).0).collect();
    let m = est.iter().sum::<f64>() / batches as f64;
    let var = est.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (autocovariance(x, lag), (var / batches as f64).sqrt())
}
