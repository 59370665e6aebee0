//! Closed forms for a single collection of `N` equally likely coupons.
//!
//! The waiting time is a sum of independent geometric stages, giving
//! `E[X] = N·H_N` and `Var[X] = N²·H⁽²⁾_N − N·H_N`. The same variance also
//! follows from the birth chain on `{0, …, N}`; both expressions are exposed
//! so they can be checked against each other and against the chain solver.

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::scalar::{NeumaierSum, Scalar, ScalarMode, Value};

/// Prefix sums `H_k = Σ_{i≤k} 1/i` and `H⁽²⁾_k = Σ_{i≤k} 1/i²` for `k ≤ n_max`.
#[derive(Debug, Clone)]
pub struct HarmonicCache<T> {
    h: Vec<T>,
    h2: Vec<T>,
}

impl HarmonicCache<BigRational> {
    pub fn exact(n_max: u64) -> Self {
        let mut h = Vec::with_capacity(n_max as usize + 1);
        let mut h2 = Vec::with_capacity(n_max as usize + 1);
        h.push(BigRational::zero());
        h2.push(BigRational::zero());
        for i in 1..=n_max {
            let prev = h.last().unwrap().clone();
            h.push(prev + BigRational::ratio(1, i));
            let prev = h2.last().unwrap().clone();
            h2.push(prev + BigRational::ratio(1, i * i));
        }
        Self { h, h2 }
    }
}

impl HarmonicCache<f64> {
    pub fn float(n_max: u64) -> Self {
        let mut h = Vec::with_capacity(n_max as usize + 1);
        let mut h2 = Vec::with_capacity(n_max as usize + 1);
        let mut acc = NeumaierSum::new();
        let mut acc2 = NeumaierSum::new();
        h.push(0.0);
        h2.push(0.0);
        for i in 1..=n_max {
            let x = i as f64;
            acc.add(1.0 / x);
            acc2.add(1.0 / (x * x));
            h.push(acc.value());
            h2.push(acc2.value());
        }
        Self { h, h2 }
    }
}

impl<T: Scalar> HarmonicCache<T> {
    pub fn n_max(&self) -> u64 {
        (self.h.len() - 1) as u64
    }

    /// `H_k`.
    pub fn h(&self, k: u64) -> &T {
        &self.h[k as usize]
    }

    /// `H⁽²⁾_k`.
    pub fn h2(&self, k: u64) -> &T {
        &self.h2[k as usize]
    }

    fn check(&self, n: u64) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if n > self.n_max() {
            return Err(Error::InvalidArgument(format!(
                "N = {n} exceeds the harmonic cache size {}",
                self.n_max()
            )));
        }
        Ok(())
    }
}

/// `N·H_N`.
pub fn expectation_single<T: Scalar>(n: u64, cache: &HarmonicCache<T>) -> Result<T> {
    cache.check(n)?;
    Ok(T::from_u64(n) * cache.h(n).clone())
}

/// `N²·H⁽²⁾_N − N·H_N`.
pub fn variance_single_geometric<T: Scalar>(n: u64, cache: &HarmonicCache<T>) -> Result<T> {
    cache.check(n)?;
    let nn = T::from_u64(n);
    Ok(nn.clone() * nn.clone() * cache.h2(n).clone() - nn * cache.h(n).clone())
}

/// `Σ_{i=0}^{N-1} N·i / (N−i)²`, the stage-by-stage form of the same variance.
pub fn variance_single_geometric_termwise<T: Scalar>(n: u64) -> Result<T> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    Ok(T::sum_all((0..n).map(|i| {
        let gap = n - i;
        T::from_u64(n) * T::from_u64(i) / (T::from_u64(gap) * T::from_u64(gap))
    })))
}

/// Variance read off the chain at state 0:
/// `N·H_N − (N·H_N)² + Σ_{k=1}^{N-1} 2N²/(N−k) · H_{N−k}`.
pub fn variance_single_markov<T: Scalar>(n: u64, cache: &HarmonicCache<T>) -> Result<T> {
    cache.check(n)?;
    let nn = T::from_u64(n);
    let mean = nn.clone() * cache.h(n).clone();
    let two_n2 = T::from_u64(2) * nn.clone() * nn;
    let tail = T::sum_all(
        (1..n).map(|k| two_n2.clone() / T::from_u64(n - k) * cache.h(n - k).clone()),
    );
    Ok(mean.clone() - mean.clone() * mean + tail)
}

/// Expected remaining purchases from `j` distinct types: `N·H_{N−j}`, zero at `j = N`.
pub fn expected_from_state_single<T: Scalar>(
    n: u64,
    j: u64,
    cache: &HarmonicCache<T>,
) -> Result<T> {
    cache.check(n)?;
    if j > n {
        return Err(Error::InvalidArgument(format!("state {j} exceeds N = {n}")));
    }
    Ok(T::from_u64(n) * cache.h(n - j).clone())
}

/// Row `i` of the fundamental matrix of the birth chain on `{0, …, N}`.
///
/// `F[0][0] = 1`; for `j ≥ max(i, 1)` the entry is `N/(N−j)`; the rest is zero.
/// Only used to check the generic solver.
pub fn fundamental_row_single<T: Scalar>(n: u64, i: u64) -> Result<Vec<T>> {
    if n == 0 || i >= n {
        return Err(Error::InvalidArgument(format!(
            "row {i} is not a transient state for N = {n}"
        )));
    }
    Ok((0..n)
        .map(|j| {
            if j == 0 {
                if i == 0 {
                    T::one()
                } else {
                    T::zero()
                }
            } else if j >= i {
                T::ratio(n, n - j)
            } else {
                T::zero()
            }
        })
        .collect())
}

/// Expectation and both variance forms for one collection.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub expectation: Value,
    pub variance_geometric: Value,
    pub variance_markov: Value,
}

impl ClosedForm {
    pub fn compute(n: u64, mode: ScalarMode) -> Result<Self> {
        match mode {
            ScalarMode::Rational => Self::with_cache(n, &HarmonicCache::exact(n)),
            ScalarMode::Float => Self::with_cache(n, &HarmonicCache::float(n)),
        }
    }

    fn with_cache<T: Scalar>(n: u64, cache: &HarmonicCache<T>) -> Result<Self> {
        Ok(Self {
            expectation: expectation_single(n, cache)?.into_value(),
            variance_geometric: variance_single_geometric(n, cache)?.into_value(),
            variance_markov: variance_single_markov(n, cache)?.into_value(),
        })
    }

    /// Whether the two variance forms agree: exactly for rationals,
    /// to `rel_tol` for floats.
    pub fn variances_agree(&self, rel_tol: f64) -> bool {
        match (&self.variance_geometric, &self.variance_markov) {
            (Value::Rational(a), Value::Rational(b)) => a == b,
            (a, b) => {
                let (a, b) = (a.to_f64(), b.to_f64());
                (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(1.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(num: u64, den: u64) -> BigRational {
        BigRational::ratio(num, den)
    }

    #[test]
    fn expectation_examples() {
        let c = HarmonicCache::exact(6);
        assert_eq!(expectation_single(1, &c).unwrap(), q(1, 1));
        assert_eq!(expectation_single(2, &c).unwrap(), q(3, 1));
        assert_eq!(expectation_single(6, &c).unwrap(), q(147, 10));
    }

    #[test]
    fn variance_examples_both_forms() {
        let c = HarmonicCache::exact(6);
        for (n, num, den) in [(1, 0, 1), (2, 2, 1), (6, 3899, 100)] {
            assert_eq!(variance_single_geometric(n, &c).unwrap(), q(num, den));
            assert_eq!(variance_single_geometric_termwise::<BigRational>(n).unwrap(), q(num, den));
            assert_eq!(variance_single_markov(n, &c).unwrap(), q(num, den));
        }
    }

    #[test]
    fn per_state_expectations() {
        let c = HarmonicCache::exact(6);
        assert_eq!(expected_from_state_single(6, 6, &c).unwrap(), q(0, 1));
        assert_eq!(expected_from_state_single(6, 5, &c).unwrap(), q(6, 1));
        assert_eq!(expected_from_state_single(6, 0, &c).unwrap(), q(147, 10));
        assert!(expected_from_state_single(6, 7, &c).is_err());
    }

    #[test]
    fn fundamental_rows_for_two() {
        assert_eq!(fundamental_row_single::<BigRational>(2, 0).unwrap(), vec![q(1, 1), q(2, 1)]);
        assert_eq!(fundamental_row_single::<BigRational>(2, 1).unwrap(), vec![q(0, 1), q(2, 1)]);
        assert!(fundamental_row_single::<BigRational>(2, 2).is_err());
    }

    #[test]
    fn fundamental_row_sums_give_expectations() {
        let n = 9;
        let c = HarmonicCache::exact(n);
        for i in 0..n {
            let row = fundamental_row_single::<BigRational>(n, i).unwrap();
            let sum = BigRational::sum_all(row);
            // k_0 carries the deterministic first purchase.
            let expected = expected_from_state_single(n, i, &c).unwrap();
            assert_eq!(sum, expected, "row {i}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let c = HarmonicCache::exact(4);
        assert!(expectation_single(0, &c).is_err());
        assert!(expectation_single(5, &c).is_err());
        assert!(variance_single_geometric_termwise::<f64>(0).is_err());
    }

    #[test]
    fn monotone_in_n_and_in_state() {
        let c = HarmonicCache::exact(60);
        for n in 2..60 {
            assert!(expectation_single(n + 1, &c).unwrap() > expectation_single(n, &c).unwrap());
            assert!(
                variance_single_geometric(n + 1, &c).unwrap()
                    > variance_single_geometric(n, &c).unwrap()
            );
            assert!(
                variance_single_markov(n + 1, &c).unwrap() > variance_single_markov(n, &c).unwrap()
            );
        }
        let n = 30;
        for j in 0..n {
            assert!(
                expected_from_state_single(n, j, &c).unwrap()
                    > expected_from_state_single(n, j + 1, &c).unwrap()
            );
        }
    }

    #[test]
    fn cache_starts_at_one() {
        let c = HarmonicCache::exact(3);
        assert_eq!(c.h(1), &q(1, 1));
        assert_eq!(c.h2(1), &q(1, 1));
        assert_eq!(c.h(3), &q(11, 6));
    }

    #[test]
    fn closed_form_modes() {
        let exact = ClosedForm::compute(6, ScalarMode::Rational).unwrap();
        assert_eq!(exact.expectation.to_string(), "147/10");
        assert_eq!(exact.variance_geometric.to_string(), "3899/100");
        assert!(exact.variances_agree(0.0));
        let float = ClosedForm::compute(6, ScalarMode::Float).unwrap();
        assert!((float.expectation.to_f64() - 14.7).abs() < 1e-12);
        assert!(float.variances_agree(1e-12));
    }
}
