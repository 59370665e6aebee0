//! Moments of `T = max_j X_j` from the marginal CDFs of each collection.
//!
//! `P(X ≤ n) = Σ_{k=0}^{N} (−1)^k C(N,k) (1 − k/N)^n` by inclusion-exclusion,
//! and for a non-negative integer `T`:
//!
//! - `E[T]  = Σ_{n≥0} P(T > n)`
//! - `E[T²] = Σ_{n≥0} (2n + 1) P(T > n)`
//!
//! This path never touches the product chain, so it serves as an independent
//! check of the chain solver.
//!
//! The alternating sum cancels badly while `n` is still close to `N`: the
//! largest term reaches ~1e11 at `N = 100`, `n = 100`. Whenever the largest
//! term exceeds [`CANCELLATION_LIMIT`] the same sum is evaluated in exact
//! integer arithmetic instead. Past that zone the float sum is accurate.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, ToPrimitive};

use crate::error::{Error, Result};
use crate::model::CollectionSpec;
use crate::scalar::NeumaierSum;

/// Largest inclusion-exclusion term tolerated in double precision.
pub const CANCELLATION_LIMIT: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConfig {
    /// Truncate once the neglected tail is below this for both moments.
    pub eps: f64,
    /// Hard cap on summed terms.
    pub n_cap: Option<u64>,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            eps: 1e-10,
            n_cap: Some(1_000_000),
        }
    }
}

impl TailConfig {
    pub fn new(eps: f64, n_cap: Option<u64>) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
        }
        Ok(Self { eps, n_cap })
    }
}

/// `P(X ≤ n)` and `P(X > n)` for one collection, both unclamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Marginal {
    pub cdf: f64,
    pub survival: f64,
}

pub(crate) fn marginal(coupons: u64, draws: u64) -> Marginal {
    if draws < coupons {
        return Marginal { cdf: 0.0, survival: 1.0 };
    }
    if coupons == 1 {
        // draws ≥ 1 here.
        return Marginal { cdf: 1.0, survival: 0.0 };
    }
    let nf = coupons as f64;
    // Terms |C(N,k) (1 − k/N)^n| for k = 1..N−1; the k = N term vanishes for n ≥ 1.
    let mut ln_binom = 0.0;
    let mut terms = Vec::with_capacity(coupons as usize - 1);
    let mut largest = 1.0f64;
    for k in 1..coupons {
        ln_binom += ((coupons - k + 1) as f64).ln() - (k as f64).ln();
        let t = (ln_binom + draws as f64 * (-(k as f64) / nf).ln_1p()).exp();
        largest = largest.max(t);
        terms.push(t);
    }
    if largest > CANCELLATION_LIMIT {
        return exact_marginal(coupons, draws);
    }
    let mut cdf = NeumaierSum::new();
    let mut survival = NeumaierSum::new();
    cdf.add(1.0);
    for (idx, &t) in terms.iter().enumerate() {
        let k = idx + 1;
        if k % 2 == 1 {
            cdf.add(-t);
            survival.add(t);
        } else {
            cdf.add(t);
            survival.add(-t);
        }
    }
    Marginal {
        cdf: cdf.value(),
        survival: survival.value(),
    }
}

/// Inclusion-exclusion in integers: `Σ_k (−1)^k C(N,k) (N−k)^n / N^n`.
fn exact_marginal(coupons: u64, draws: u64) -> Marginal {
    let mut numer = BigInt::from(0);
    let mut binom = BigInt::from(1);
    for k in 0..coupons {
        let term = &binom * BigInt::from(coupons - k).pow(draws);
        if k % 2 == 0 {
            numer += term;
        } else {
            numer -= term;
        }
        binom = binom * BigInt::from(coupons - k) / BigInt::from(k + 1);
    }
    let denom = BigInt::from(coupons).pow(draws);
    let cdf = BigRational::new(numer, denom);
    let survival = BigRational::from_integer(BigInt::from(1)) - &cdf;
    Marginal {
        cdf: cdf.to_f64().unwrap_or(0.0),
        survival: survival.to_f64().unwrap_or(1.0),
    }
}

/// `P(X ≤ n)` for one collection of `N` coupons, clamped to `[0, 1]`.
pub fn cdf_single(coupons: u64, draws: u64) -> Result<f64> {
    if coupons == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    Ok(marginal(coupons, draws).cdf.clamp(0.0, 1.0))
}

/// `P(X > n)` for one collection, clamped to `[0, 1]`.
pub fn survival_single(coupons: u64, draws: u64) -> Result<f64> {
    if coupons == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    Ok(marginal(coupons, draws).survival.clamp(0.0, 1.0))
}

/// Moments of the completion time of all collections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMoments {
    pub expectation: f64,
    pub variance: f64,
    /// Number of tail terms summed (`n = 0..terms`).
    pub terms: u64,
    /// Upper bound on what the neglected tail contributes to either moment.
    pub truncation_bound: f64,
}

/// Union bound tails `Σ_{n≥n0} P(X>n)` and `Σ_{n≥n0} (2n+1) P(X>n)` with
/// `P(X > n) ≤ N (1 − 1/N)^n`, summed in closed form.
fn tail_bounds(groups: &BTreeMap<u64, usize>, n0: u64) -> (f64, f64) {
    let mut first = 0.0;
    let mut second = 0.0;
    for (&coupons, &count) in groups {
        if coupons == 1 {
            if n0 == 0 {
                first += count as f64;
                second += count as f64;
            }
            continue;
        }
        let nf = coupons as f64;
        let r = 1.0 - 1.0 / nf;
        let rn = (n0 as f64 * (-1.0 / nf).ln_1p()).exp();
        let one_minus_r = 1.0 / nf;
        // Σ_{n≥n0} r^n and Σ_{n≥n0} n r^n.
        let geo = rn / one_minus_r;
        let lin = rn * (n0 as f64 * one_minus_r + r) / (one_minus_r * one_minus_r);
        first += count as f64 * nf * geo;
        second += count as f64 * nf * (2.0 * lin + geo);
    }
    (first, second)
}

/// `P(T > n)` from the per-collection survival probabilities.
fn survival_of_max(groups: &BTreeMap<u64, usize>, n: u64) -> f64 {
    let marginals: Vec<(Marginal, usize)> = groups
        .iter()
        .map(|(&coupons, &count)| {
            let m = marginal(coupons, n);
            (
                Marginal {
                    cdf: m.cdf.clamp(0.0, 1.0),
                    survival: m.survival.clamp(0.0, 1.0),
                },
                count,
            )
        })
        .collect();
    if marginals.iter().all(|(m, _)| m.cdf >= 0.5) {
        // 1 − ∏ (1 − s_j), kept accurate when every s_j is tiny.
        let log_all: f64 = marginals
            .iter()
            .map(|(m, count)| *count as f64 * (-m.survival).ln_1p())
            .sum();
        -log_all.exp_m1()
    } else {
        let all: f64 = marginals
            .iter()
            .map(|(m, count)| m.cdf.powi(*count as i32))
            .product();
        1.0 - all
    }
}

/// Mean and variance of the completion time of every collection in `spec`.
pub fn max_moments(spec: &CollectionSpec, cfg: &TailConfig) -> Result<TailMoments> {
    let mut groups = BTreeMap::new();
    for &n in spec.sizes() {
        *groups.entry(n).or_insert(0usize) += 1;
    }
    let mut first = NeumaierSum::new();
    let mut second = NeumaierSum::new();
    let mut n = 0u64;
    loop {
        let p = survival_of_max(&groups, n);
        first.add(p);
        second.add((2 * n + 1) as f64 * p);
        n += 1;
        let (b1, b2) = tail_bounds(&groups, n);
        let bound = b1.max(b2);
        if b1 < cfg.eps && b2 < cfg.eps {
            let expectation = first.value();
            return Ok(TailMoments {
                expectation,
                variance: second.value() - expectation * expectation,
                terms: n,
                truncation_bound: bound,
            });
        }
        if let Some(cap) = cfg.n_cap {
            if n >= cap {
                return Err(Error::TailCapExceeded { cap, bound });
            }
        }
    }
}
