//! Hitting-time moments of the absorbing product chain.
//!
//! With states in topological order, `Id − Q` is upper triangular with the
//! self-loop complements on its diagonal. Both moment vectors come from a
//! single backward sweep each:
//!
//! - `k` solves `(Id − Q) k = 1`,
//! - `w` solves `(Id − Q) w = k`, and then `v = 2w − k − k²`.
//!
//! The fundamental matrix `F = (Id − Q)⁻¹` is only materialized on small
//! instances, for identity checks.

use crate::error::{Error, Result};
use crate::model::StateSpace;
use crate::scalar::{Prob, Scalar, ScalarMode, Value};

/// Default cap on the transient-state count for [`fundamental_matrix`].
pub const DEFAULT_DENSE_LIMIT: usize = 2_000;

/// Work done by one backward sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub rows: usize,
    pub edges_visited: u64,
}

/// Per-state mean and variance of the steps to absorption.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionStats<T> {
    pub k: Vec<T>,
    pub v: Vec<T>,
    pub mode: ScalarMode,
    pub expectation_sweep: SweepStats,
    pub variance_sweep: SweepStats,
}

impl<T: Scalar> AbsorptionStats<T> {
    pub fn expectation_at_origin(&self) -> &T {
        &self.k[0]
    }

    pub fn variance_at_origin(&self) -> &T {
        &self.v[0]
    }
}

/// Solves `(Id − Q) x = rhs` over the transient states in descending index order.
/// The absorbing entry of the result is zero.
fn backward_sweep<T: Scalar>(
    space: &StateSpace,
    rhs: impl Fn(usize) -> T,
) -> Result<(Vec<T>, SweepStats)> {
    let absorbing = space.absorbing_index();
    let mut x = vec![T::zero(); space.len()];
    let mut stats = SweepStats::default();
    for s in (0..absorbing).rev() {
        let row = space.row(s)?;
        let stay = row.self_loop();
        let diag = Prob::new(1, 1) - stay;
        if *diag.numer() == 0 {
            return Err(Error::DegenerateDiagonal { index: s });
        }
        stats.rows += 1;
        stats.edges_visited += row.edges.len() as u64;
        let terms = row
            .outgoing()
            .filter(|e| e.target != absorbing)
            .map(|e| {
                debug_assert!(e.target > s, "ordering is not topological");
                x[e.target].mul_prob(&e.prob)
            });
        let acc = T::sum_all(std::iter::once(rhs(s)).chain(terms));
        x[s] = acc / T::from_prob(&diag);
    }
    Ok((x, stats))
}

/// Expected steps to absorption from every state.
pub fn solve_expectations<T: Scalar>(space: &StateSpace) -> Result<(Vec<T>, SweepStats)> {
    backward_sweep(space, |_| T::one())
}

/// Variance of the steps to absorption from every state, given `k` from
/// [`solve_expectations`] on the same space.
pub fn solve_variances<T: Scalar>(space: &StateSpace, k: &[T]) -> Result<(Vec<T>, SweepStats)> {
    if k.len() != space.len() {
        return Err(Error::InvalidArgument(format!(
            "expectation vector has {} entries, space has {}",
            k.len(),
            space.len()
        )));
    }
    let (w, stats) = backward_sweep(space, |s| k[s].clone())?;
    let absorbing = space.absorbing_index();
    let v = w
        .into_iter()
        .zip(k)
        .enumerate()
        .map(|(s, (w, k))| {
            if s == absorbing {
                T::zero()
            } else {
                T::from_u64(2) * w - k.clone() - k.clone() * k.clone()
            }
        })
        .collect();
    Ok((v, stats))
}

pub fn absorption_stats<T: Scalar>(space: &StateSpace) -> Result<AbsorptionStats<T>> {
    let (k, expectation_sweep) = solve_expectations::<T>(space)?;
    let (v, variance_sweep) = solve_variances(space, &k)?;
    Ok(AbsorptionStats {
        k,
        v,
        mode: T::MODE,
        expectation_sweep,
        variance_sweep,
    })
}

/// Moment vectors with the scalar type chosen at runtime.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub k: Vec<Value>,
    pub v: Vec<Value>,
    pub mode: ScalarMode,
    pub edges_visited: u64,
}

pub fn solve(space: &StateSpace, mode: ScalarMode) -> Result<Moments> {
    fn erase<T: Scalar>(stats: AbsorptionStats<T>) -> Moments {
        Moments {
            edges_visited: stats.expectation_sweep.edges_visited,
            mode: stats.mode,
            k: stats.k.into_iter().map(Scalar::into_value).collect(),
            v: stats.v.into_iter().map(Scalar::into_value).collect(),
        }
    }
    Ok(match mode {
        ScalarMode::Rational => erase(absorption_stats::<num_rational::BigRational>(space)?),
        ScalarMode::Float => erase(absorption_stats::<f64>(space)?),
    })
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.n).map(|i| T::sum_all(self.row(i).iter().cloned())).collect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }

    /// Entries that are not exactly zero.
    pub fn nonzeros(&self) -> usize {
        self.data.iter().filter(|x| !x.is_zero()).count()
    }
}

/// `Q`, the transient-to-transient block, in sparse row form with exact entries.
#[derive(Debug, Clone)]
pub struct TransientMatrix {
    rows: Vec<Vec<(usize, Prob)>>,
}

impl TransientMatrix {
    pub fn new(space: &StateSpace) -> Result<Self> {
        let absorbing = space.absorbing_index();
        let rows = (0..absorbing)
            .map(|s| {
                Ok(space
                    .row(s)?
                    .edges
                    .iter()
                    .filter(|e| e.target != absorbing)
                    .map(|e| (e.target, e.prob))
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// `Q · F`.
    pub fn mul_left_of<T: Scalar>(&self, f: &DenseMatrix<T>) -> DenseMatrix<T> {
        let n = self.size();
        assert_eq!(f.size(), n);
        let mut out = DenseMatrix::zeros(n);
        for (s, edges) in self.rows.iter().enumerate() {
            for col in 0..n {
                let terms: Vec<T> = edges
                    .iter()
                    .filter(|(t, _)| !f.get(*t, col).is_zero())
                    .map(|(t, q)| f.get(*t, col).mul_prob(q))
                    .collect();
                if !terms.is_empty() {
                    out.data[s * n + col] = T::sum_all(terms);
                }
            }
        }
        out
    }

    /// `F · Q`.
    pub fn mul_right_of<T: Scalar>(&self, f: &DenseMatrix<T>) -> DenseMatrix<T> {
        let n = self.size();
        assert_eq!(f.size(), n);
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            let f_row = f.row(i);
            for (t, edges) in self.rows.iter().enumerate() {
                if f_row[t].is_zero() {
                    continue;
                }
                for (u, q) in edges {
                    let cell: &mut T = &mut out.data[i * n + *u];
                    *cell = cell.clone() + f_row[t].mul_prob(q);
                }
            }
        }
        out
    }
}

/// `F = (Id − Q)⁻¹` over the transient states.
///
/// Built row by row from the back: `(1 − q_ss) F[s] = e_s + Σ_{t≠s} q_st F[t]`.
pub fn fundamental_matrix<T: Scalar>(space: &StateSpace, dense_limit: usize) -> Result<DenseMatrix<T>> {
    let n = space.transient_count();
    if n > dense_limit {
        return Err(Error::DenseLimit {
            transient: n,
            limit: dense_limit,
        });
    }
    let absorbing = space.absorbing_index();
    let mut f = DenseMatrix::<T>::zeros(n);
    for s in (0..n).rev() {
        let row = space.row(s)?;
        let diag = Prob::new(1, 1) - row.self_loop();
        if *diag.numer() == 0 {
            return Err(Error::DegenerateDiagonal { index: s });
        }
        let inv_diag = Prob::new(*diag.denom(), *diag.numer());
        let edges: Vec<(usize, Prob)> = row
            .outgoing()
            .filter(|e| e.target != absorbing)
            .map(|e| (e.target, e.prob))
            .collect();
        for col in s..n {
            // F[s][col] vanishes unless col is reachable from s.
            let terms: Vec<T> = edges
                .iter()
                .filter(|(t, _)| !f.get(*t, col).is_zero())
                .map(|(t, q)| f.get(*t, col).mul_prob(q))
                .collect();
            if col != s && terms.is_empty() {
                continue;
            }
            let unit = if col == s { T::one() } else { T::zero() };
            f.data[s * n + col] = T::sum_all(std::iter::once(unit).chain(terms)).mul_prob(&inv_diag);
        }
    }
    Ok(f)
}
