use std::io::Write;

use crate::linalg::DenseMatrix;
use crate::{Error, Real, Result};

use super::{StateSpace, SystemConfig};

/// Inter-level transfer from position `from` of one level to position `to`
/// of the adjacent level. Upward blocks are `coef · Λ1`, downward blocks
/// are `coef · I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link<T> {
    pub from: usize,
    pub to: usize,
    pub coef: T,
}

/// Blocks of one level of the generator.
#[derive(Debug, Clone)]
pub struct LevelBlocks<T> {
    /// One `M × M` diagonal block per state of the level.
    pub diag: Vec<DenseMatrix<T>>,
    /// Accepted arrivals into level `k + 1`.
    pub up: Vec<Link<T>>,
    /// Departures into level `k - 1`.
    pub down: Vec<Link<T>>,
}

impl<T> LevelBlocks<T> {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }
}

/// Block-tridiagonal generator of `(sessions, PRBs, phase)`.
///
/// Global order is level-major, then PRB total ascending within a level,
/// then phase.
#[derive(Debug, Clone)]
pub struct Generator<T> {
    phases: usize,
    lambda1: DenseMatrix<T>,
    levels: Vec<LevelBlocks<T>>,
    offsets: Vec<usize>,
}

/// Assembles the generator of the simplified (Bayesian-release) process.
pub fn assemble_generator<T: Real>(cfg: &SystemConfig<T>, space: &StateSpace<T>) -> Result<Generator<T>> {
    let m = cfg.map.phases();
    let q = cfg.map.generator();
    let lambda1 = cfg.map.lambda1().clone();
    let conv = space.convolution();
    let prbs = space.prbs();
    let mu = cfg.service_rate;
    let atoms: Vec<(usize, T)> = cfg.pmf.support().filter(|&(j, _)| j <= prbs).collect();

    let mut levels = Vec::with_capacity(space.top_level() + 1);
    for k in 0..=space.top_level() {
        let kmu = T::of_usize(k) * mu;
        let accepts = k < cfg.servers;
        let mut blocks = LevelBlocks { diag: Vec::with_capacity(space.level_len(k)), up: Vec::new(), down: Vec::new() };
        for (i, &r) in space.level(k).iter().enumerate() {
            let mut admit = T::zero();
            if accepts {
                for &(j, p) in atoms.iter().take_while(|&&(j, _)| r + j <= prbs) {
                    admit = admit + p;
                    let to = space
                        .position(k + 1, r + j)
                        .ok_or_else(|| Error::Assembly(format!("arrival target ({}, {}) missing", k + 1, r + j)))?;
                    blocks.up.push(Link { from: i, to, coef: p });
                }
            }
            let mut d = q.add(&lambda1.scale(-admit));
            for ph in 0..m {
                d[(ph, ph)] = d[(ph, ph)] - kmu;
            }
            blocks.diag.push(d);

            if k > 0 {
                let below: Vec<(usize, T)> = space
                    .level(k - 1)
                    .iter()
                    .enumerate()
                    .filter(|&(_, &s)| s < r && cfg.pmf.p(r - s) > T::zero())
                    .map(|(pos, &s)| (pos, cfg.pmf.p(r - s) * conv.get(k - 1, s)))
                    .collect();
                let norm: T = below.iter().map(|b| b.1).sum();
                if below.is_empty() {
                    return Err(Error::Assembly(format!("state ({k}, {r}) has no departure target")));
                }
                // p_{r-s} p_s^(k-1) / p_r^(k); the normalizer equals p_r^(k)
                for (pos, w) in &below {
                    let weight = if norm > T::zero() { *w / norm } else { T::one() / T::of_usize(below.len()) };
                    blocks.down.push(Link { from: i, to: *pos, coef: weight * kmu });
                }
            }
        }
        levels.push(blocks);
    }

    let mut offsets = Vec::with_capacity(levels.len() + 1);
    let mut acc = 0;
    for l in &levels {
        offsets.push(acc);
        acc += l.len() * m;
    }
    offsets.push(acc);

    let gen = Generator { phases: m, lambda1, levels, offsets };
    let scale = gen.max_exit_rate().max(T::one());
    let worst = gen.max_row_sum_error();
    if worst > T::tol(1e-12) * scale {
        return Err(Error::Assembly(format!("generator row sum deviates by {worst}")));
    }
    Ok(gen)
}

impl<T: Real> Generator<T> {
    pub fn phases(&self) -> usize {
        self.phases
    }

    pub fn dimension(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> &LevelBlocks<T> {
        &self.levels[k]
    }

    /// Global index of the first unknown of level `k`.
    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    /// Unknowns in level `k` (`s_k · M`).
    pub fn level_dim(&self, k: usize) -> usize {
        self.levels[k].len() * self.phases
    }

    pub fn lambda1(&self) -> &DenseMatrix<T> {
        &self.lambda1
    }

    /// Visits every structurally nonzero entry once, as `(row, col, value)`.
    pub fn for_each_entry<F: FnMut(usize, usize, T)>(&self, mut f: F) {
        let m = self.phases;
        for (k, level) in self.levels.iter().enumerate() {
            let base = self.offsets[k];
            for (i, d) in level.diag.iter().enumerate() {
                for a in 0..m {
                    for b in 0..m {
                        let v = d[(a, b)];
                        if v != T::zero() {
                            f(base + i * m + a, base + i * m + b, v);
                        }
                    }
                }
            }
            if k + 1 < self.levels.len() {
                let up = self.offsets[k + 1];
                for l in &level.up {
                    for a in 0..m {
                        for b in 0..m {
                            let v = l.coef * self.lambda1[(a, b)];
                            if v != T::zero() {
                                f(base + l.from * m + a, up + l.to * m + b, v);
                            }
                        }
                    }
                }
            }
            if k > 0 {
                let down = self.offsets[k - 1];
                for l in &level.down {
                    for a in 0..m {
                        f(base + l.from * m + a, down + l.to * m + a, l.coef);
                    }
                }
            }
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::new();
        self.for_each_entry(|i, j, v| out.push((i, j, v)));
        out
    }

    /// Writes the generator as coordinate triplets.
    ///
    /// Format: lines starting with `#` are comments; the header states
    /// `# dimension <n>` and `# nonzeros <nnz>`. Each following line is
    /// `<row> <col> <value>` with 0-based indices in the global state order
    /// and the value in `{:e}` notation with 17 significant digits.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let t = self.triplets();
        writeln!(w, "# relq generator triplets v1")?;
        writeln!(w, "# order: level, PRB total, phase")?;
        writeln!(w, "# dimension {}", self.dimension())?;
        writeln!(w, "# nonzeros {}", t.len())?;
        for (i, j, v) in t {
            writeln!(w, "{i} {j} {:.16e}", v.as_f64())?;
        }
        Ok(())
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.dimension();
        let mut d = DenseMatrix::zeros(n, n);
        self.for_each_entry(|i, j, v| d[(i, j)] = d[(i, j)] + v);
        d
    }

    pub fn row_sums(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.dimension()];
        self.for_each_entry(|i, _, v| s[i] = s[i] + v);
        s
    }

    pub fn max_row_sum_error(&self) -> T {
        self.row_sums().into_iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest total outflow rate of any state.
    pub fn max_exit_rate(&self) -> T {
        let mut worst = T::zero();
        self.for_each_entry(|i, j, v| {
            if i == j {
                worst = worst.max(-v);
            }
        });
        worst
    }

    /// `x G` for a global row vector `x`.
    pub fn left_mul(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.dimension());
        let mut out = vec![T::zero(); x.len()];
        self.for_each_entry(|i, j, v| out[j] = out[j] + x[i] * v);
        out
    }

    /// Dense diagonal block `D_k`.
    pub fn diag_dense(&self, k: usize) -> DenseMatrix<T> {
        let m = self.phases;
        let n = self.level_dim(k);
        let mut out = DenseMatrix::zeros(n, n);
        for (i, d) in self.levels[k].diag.iter().enumerate() {
            for a in 0..m {
                for b in 0..m {
                    out[(i * m + a, i * m + b)] = d[(a, b)];
                }
            }
        }
        out
    }

    /// Dense upward block `L_k` (level `k` → `k + 1`).
    pub fn up_dense(&self, k: usize) -> DenseMatrix<T> {
        let m = self.phases;
        let mut out = DenseMatrix::zeros(self.level_dim(k), self.level_dim(k + 1));
        for l in &self.levels[k].up {
            for a in 0..m {
                for b in 0..m {
                    let idx = (l.from * m + a, l.to * m + b);
                    out[idx] = out[idx] + l.coef * self.lambda1[(a, b)];
                }
            }
        }
        out
    }
}
