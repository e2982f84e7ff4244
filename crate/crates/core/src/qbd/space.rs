use crate::radio::DemandPmf;
use crate::{Error, Real, Result};

use super::SystemConfig;

/// `p_r^(k)`: probability that `k` sessions together hold `r` PRBs, for
/// `0 <= k <= N`, `0 <= r <= R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionTable<T> {
    table: Vec<Vec<T>>,
    reachable: Vec<Vec<bool>>,
}

impl<T: Real> ConvolutionTable<T> {
    #[inline]
    pub fn get(&self, k: usize, r: usize) -> T {
        self.table.get(k).and_then(|row| row.get(r)).copied().unwrap_or_else(T::zero)
    }

    /// Structural support: true when some demand tuple of length `k` sums to `r`.
    /// Unlike `get(k, r) > 0` this is immune to underflow.
    #[inline]
    pub fn is_reachable(&self, k: usize, r: usize) -> bool {
        self.reachable.get(k).and_then(|row| row.get(r)).copied().unwrap_or(false)
    }

    pub fn levels(&self) -> usize {
        self.table.len()
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.table[k]
    }
}

/// `k`-fold convolutions of the demand PMF truncated to `r <= R`.
pub fn convolve_demands<T: Real>(pmf: &DemandPmf<T>, servers: usize, prbs: usize) -> ConvolutionTable<T> {
    let atoms: Vec<(usize, T)> = pmf.support().filter(|&(j, _)| j <= prbs).collect();
    let mut table = Vec::with_capacity(servers + 1);
    let mut reachable = Vec::with_capacity(servers + 1);
    let mut first = vec![T::zero(); prbs + 1];
    first[0] = T::one();
    let mut first_reach = vec![false; prbs + 1];
    first_reach[0] = true;
    table.push(first);
    reachable.push(first_reach);
    for k in 1..=servers {
        let prev = &table[k - 1];
        let prev_reach = &reachable[k - 1];
        let mut row = vec![T::zero(); prbs + 1];
        let mut reach = vec![false; prbs + 1];
        for r in k..=prbs {
            let mut acc = T::zero();
            for &(j, p) in &atoms {
                if j > r {
                    break;
                }
                if prev_reach[r - j] {
                    acc = acc + p * prev[r - j];
                    reach[r] = true;
                }
            }
            row[r] = acc;
        }
        table.push(row);
        reachable.push(reach);
    }
    ConvolutionTable { table, reachable }
}

/// Level-structured state space: level 0 is the empty system, level `k`
/// holds the attainable totals `r` of `k` sessions in ascending order.
#[derive(Debug, Clone)]
pub struct StateSpace<T> {
    servers: usize,
    prbs: usize,
    levels: Vec<Vec<usize>>,
    index: Vec<Vec<usize>>,
    conv: ConvolutionTable<T>,
}

impl<T: Real> StateSpace<T> {
    pub fn build(cfg: &SystemConfig<T>) -> Result<Self> {
        let (n, prbs) = (cfg.servers, cfg.prbs);
        let conv = convolve_demands(&cfg.pmf, n, prbs);
        let mut levels = vec![vec![0usize]];
        let mut index = vec![{
            let mut row = vec![0usize; prbs + 1];
            row[0] = 1;
            row
        }];
        for k in 1..=n {
            let states: Vec<usize> = (0..=prbs).filter(|&r| conv.is_reachable(k, r)).collect();
            if states.is_empty() {
                break;
            }
            let mut row = vec![0usize; prbs + 1];
            for (i, &r) in states.iter().enumerate() {
                row[r] = i + 1;
            }
            levels.push(states);
            index.push(row);
        }
        if levels.len() < 2 {
            return Err(Error::DegenerateSystem(format!("no demand fits into R = {prbs} PRBs")));
        }
        Ok(Self { servers: n, prbs, levels, index, conv })
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn prbs(&self) -> usize {
        self.prbs
    }

    /// Highest populated level (`<= N`).
    pub fn top_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// `s_k`; 1 for level 0.
    pub fn level_len(&self, k: usize) -> usize {
        self.levels.get(k).map_or(0, Vec::len)
    }

    /// PRB totals of level `k`, ascending.
    pub fn level(&self, k: usize) -> &[usize] {
        self.levels.get(k).map_or(&[], Vec::as_slice)
    }

    /// `I(k, r)`: 1-based position of `(k, r)` within `S_k`, 0 when absent.
    pub fn index(&self, k: usize, r: usize) -> usize {
        self.index.get(k).and_then(|row| row.get(r)).copied().unwrap_or(0)
    }

    /// 0-based position within the level.
    pub fn position(&self, k: usize, r: usize) -> Option<usize> {
        self.index(k, r).checked_sub(1)
    }

    /// `1 + Σ s_k` (states without phase).
    pub fn total_states(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn convolution(&self) -> &ConvolutionTable<T> {
        &self.conv
    }

    /// `(k, r)` pairs in global order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.levels.iter().enumerate().flat_map(|(k, rs)| rs.iter().map(move |&r| (k, r)))
    }
}
