use std::fmt;

use crate::linalg::{stochastic_null_vector, DenseMatrix, Lu};
use crate::{Error, Real, Result};

use super::{Generator, StateSpace};

/// Largest level block (unknowns) the automatic choice factorizes directly.
const DIRECT_LEVEL_LIMIT: usize = 800;
/// Systems below this size may fall back to a full dense solve.
const DENSE_LIMIT: usize = 2000;
const CLAMP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussSeidelOptions {
    /// Stop when the largest relative change over a sweep drops below this.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for GaussSeidelOptions {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_sweeps: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SolveMethod {
    /// Level elimination, Gauss–Seidel when level blocks are very large.
    #[default]
    Auto,
    /// Block elimination over levels (linear level reduction).
    Direct,
    /// Full dense LU with one balance equation replaced by normalization.
    Dense,
    GaussSeidel(GaussSeidelOptions),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverTag {
    Direct,
    GaussSeidel,
}

impl fmt::Display for SolverTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Direct => "direct",
            Self::GaussSeidel => "gauss-seidel",
        })
    }
}

/// Stationary distribution of the level process.
#[derive(Debug, Clone)]
pub struct QbdSolution<T> {
    phases: usize,
    /// Level `k` flattened as `s_k · M` probabilities.
    levels: Vec<Vec<T>>,
    pub residual: T,
    pub solver: SolverTag,
    /// Gauss–Seidel sweeps used, if applicable.
    pub sweeps: Option<usize>,
}

impl<T: Real> QbdSolution<T> {
    pub fn phases(&self) -> usize {
        self.phases
    }

    /// `q_0`.
    pub fn q0(&self) -> &[T] {
        &self.levels[0]
    }

    /// `q_{k,r}` as an `M`-vector, `None` when `(k, r)` is not a state.
    pub fn q<'a>(&'a self, space: &StateSpace<T>, k: usize, r: usize) -> Option<&'a [T]> {
        let pos = space.position(k, r)?;
        let m = self.phases;
        self.levels.get(k).map(|l| &l[pos * m..(pos + 1) * m])
    }

    pub fn level(&self, k: usize) -> &[T] {
        &self.levels[k]
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn total_mass(&self) -> T {
        self.levels.iter().flatten().copied().sum()
    }

    /// Probabilities in global state order.
    pub fn to_vec(&self) -> Vec<T> {
        self.levels.iter().flatten().copied().collect()
    }
}

/// Solves `q G = 0`, `q 1 = 1`.
pub fn solve_stationary<T: Real>(gen: &Generator<T>, method: SolveMethod) -> Result<QbdSolution<T>> {
    let (raw, tag, sweeps) = match method {
        SolveMethod::Direct => (block_elimination(gen)?, SolverTag::Direct, None),
        SolveMethod::Dense => (dense(gen)?, SolverTag::Direct, None),
        SolveMethod::GaussSeidel(opts) => {
            let (v, s) = gauss_seidel(gen, opts)?;
            (v, SolverTag::GaussSeidel, Some(s))
        }
        SolveMethod::Auto => {
            let widest = (0..gen.level_count()).map(|k| gen.level_dim(k)).max().unwrap_or(0);
            let direct = if widest <= DIRECT_LEVEL_LIMIT {
                match block_elimination(gen) {
                    Err(Error::Singular { .. }) if gen.dimension() < DENSE_LIMIT => dense(gen).ok(),
                    other => Some(other?),
                }
            } else {
                None
            };
            match direct {
                Some(v) => (v, SolverTag::Direct, None),
                None => {
                    let (v, s) = gauss_seidel(gen, GaussSeidelOptions::default())?;
                    (v, SolverTag::GaussSeidel, Some(s))
                }
            }
        }
    };
    finish(gen, raw, tag, sweeps)
}

fn finish<T: Real>(
    gen: &Generator<T>,
    mut q: Vec<T>,
    solver: SolverTag,
    sweeps: Option<usize>,
) -> Result<QbdSolution<T>> {
    let total: T = q.iter().copied().sum();
    if !(total.abs() > T::zero()) || !total.is_finite() {
        return Err(Error::Structural("stationary vector has no mass".into()));
    }
    for v in q.iter_mut() {
        *v = *v / total;
    }
    let floor = -T::tol(CLAMP);
    for (i, v) in q.iter_mut().enumerate() {
        if *v < T::zero() {
            if *v < floor {
                return Err(Error::NegativeProbability { index: i, value: v.as_f64() });
            }
            *v = T::zero();
        }
    }
    let total: T = q.iter().copied().sum();
    for v in q.iter_mut() {
        *v = *v / total;
    }
    let residual = gen.left_mul(&q).into_iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let m = gen.phases();
    let levels =
        (0..gen.level_count()).map(|k| q[gen.offset(k)..gen.offset(k) + gen.level_dim(k)].to_vec()).collect::<Vec<_>>();
    debug_assert!(levels.iter().map(Vec::len).sum::<usize>() == gen.dimension());
    Ok(QbdSolution { phases: m, levels, residual, solver, sweeps })
}

/// Linear level reduction: `q_k = q_{k-1} R_k` with
/// `R_k = -L_{k-1} (D_k + R_{k+1} M_{k+1})^{-1}`, then `q_0 (D_0 + R_1 M_1) = 0`.
fn block_elimination<T: Real>(gen: &Generator<T>) -> Result<Vec<T>> {
    let top = gen.level_count() - 1;
    let m = gen.phases();
    let mut rates: Vec<DenseMatrix<T>> = Vec::with_capacity(top);
    let mut u = gen.diag_dense(top);
    for k in (1..=top).rev() {
        let lu = Lu::new(u)?;
        let up = gen.up_dense(k - 1);
        let rows = gen.level_dim(k - 1);
        let cols = gen.level_dim(k);
        let mut r = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            let rhs: Vec<T> = up.row(i).iter().map(|&v| -v).collect();
            if rhs.iter().all(|&v| v == T::zero()) {
                continue;
            }
            r.row_mut(i).copy_from_slice(&lu.solve_left(&rhs));
        }
        // U_{k-1} = D_{k-1} + R_k M_k, with M_k made of scaled identity blocks
        let mut next = gen.diag_dense(k - 1);
        for link in &gen.level(k).down {
            for i in 0..rows {
                for a in 0..m {
                    let v = r[(i, link.from * m + a)];
                    if v != T::zero() {
                        next[(i, link.to * m + a)] = next[(i, link.to * m + a)] + v * link.coef;
                    }
                }
            }
        }
        rates.push(r);
        u = next;
    }
    rates.reverse();
    let mut q = stochastic_null_vector(&u)?;
    let mut out = q.clone();
    for r in &rates {
        q = r.left_mul(&q);
        out.extend_from_slice(&q);
    }
    Ok(out)
}

fn dense<T: Real>(gen: &Generator<T>) -> Result<Vec<T>> {
    stochastic_null_vector(&gen.to_dense())
}

/// Column-oriented sparse copy of the generator for Gauss–Seidel.
struct Columns<T> {
    start: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<T>,
    diag: Vec<T>,
}

fn columns<T: Real>(gen: &Generator<T>) -> Columns<T> {
    let n = gen.dimension();
    let mut count = vec![0usize; n + 1];
    let mut diag = vec![T::zero(); n];
    gen.for_each_entry(|i, j, v| {
        if i == j {
            diag[j] = diag[j] + v;
        } else {
            count[j + 1] += 1;
        }
    });
    for j in 0..n {
        count[j + 1] += count[j];
    }
    let start = count.clone();
    let mut fill = count;
    let nnz = start[n];
    let mut rows = vec![0usize; nnz];
    let mut vals = vec![T::zero(); nnz];
    gen.for_each_entry(|i, j, v| {
        if i != j {
            rows[fill[j]] = i;
            vals[fill[j]] = v;
            fill[j] += 1;
        }
    });
    Columns { start, rows, vals, diag }
}

fn gauss_seidel<T: Real>(gen: &Generator<T>, opts: GaussSeidelOptions) -> Result<(Vec<T>, usize)> {
    let n = gen.dimension();
    let cols = columns(gen);
    let mut q = vec![T::one() / T::of_usize(n); n];
    let tol = T::of(opts.tolerance);
    let mut history = Vec::new();
    for sweep in 1..=opts.max_sweeps {
        let mut change = T::zero();
        for j in 0..n {
            let mut inflow = T::zero();
            for idx in cols.start[j]..cols.start[j + 1] {
                inflow = inflow + q[cols.rows[idx]] * cols.vals[idx];
            }
            let d = cols.diag[j];
            if d == T::zero() {
                return Err(Error::Singular { pivot: j });
            }
            let v = -inflow / d;
            change = change.max((v - q[j]).abs());
            q[j] = v;
        }
        let total: T = q.iter().copied().sum();
        let peak = q.iter().fold(T::zero(), |m, &v| m.max(v.abs())) / total;
        for v in q.iter_mut() {
            *v = *v / total;
        }
        let rel = change / total / peak.max(T::min_positive_value());
        history.push(rel.as_f64());
        if rel < tol {
            return Ok((q, sweep));
        }
    }
    Err(Error::NotConverged {
        sweeps: opts.max_sweeps,
        last: history.last().copied().unwrap_or(f64::NAN),
        residual_history: history,
    })
}
