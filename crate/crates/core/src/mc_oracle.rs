//! Monte Carlo estimates of the completion time.
//!
//! One draw of a single collection is `1 + Σ_{i=2}^{N} G_i` with `G_i`
//! geometric on `{1, 2, …}` with success probability `(N − i + 1)/N`, each
//! sampled by inversion: `G = ⌈ln U / ln(1 − p)⌉`. Parallel collections are
//! independent, so a trial is the max of one draw per collection.
//!
//! # Reproducibility
//!
//! Trials are split into chunks of [`CHUNK_TRIALS`]. Chunk `c` draws from
//! ChaCha8 seeded with `seed_from_u64(seed)` on stream `c`. Per-chunk sums of
//! `x` and `x²` are exact integers, so the pooled estimate is bit-identical
//! for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CollectionSpec;

/// Trials per independently seeded chunk.
pub const CHUNK_TRIALS: u64 = 16_384;

/// Mean and spread of a batch of simulated completion times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Unbiased (`n − 1` denominator).
    pub sample_variance: f64,
    pub stderr_mean: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Generator for chunk `chunk` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Precomputed `ln(1 − p_i)` for the stages of one collection.
#[derive(Debug, Clone)]
pub struct SingleSampler {
    coupons: u64,
    log_fail: Vec<f64>,
}

impl SingleSampler {
    pub fn new(coupons: u64) -> Result<Self> {
        if coupons == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        // Stage i (2 ≤ i ≤ N) fails with probability (i − 1)/N.
        let n = coupons as f64;
        let log_fail = (2..=coupons).map(|i| ((i - 1) as f64 / n).ln()).collect();
        Ok(Self { coupons, log_fail })
    }

    pub fn coupons(&self) -> u64 {
        self.coupons
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        1 + self
            .log_fail
            .iter()
            .map(|&lf| geometric_by_inversion(lf, rng))
            .sum::<u64>()
    }
}

/// Geometric on `{1, 2, …}` given `ln(1 − p)` with `0 < p < 1`.
fn geometric_by_inversion<R: Rng + ?Sized>(log_fail: f64, rng: &mut R) -> u64 {
    // 1 − U lies in (0, 1].
    let u = 1.0 - rng.random::<f64>();
    let g = (u.ln() / log_fail).ceil();
    if g < 1.0 {
        1
    } else {
        g as u64
    }
}

/// One draw of the completion time of a single collection of `N` coupons.
pub fn sample_single<R: Rng + ?Sized>(coupons: u64, rng: &mut R) -> Result<u64> {
    Ok(SingleSampler::new(coupons)?.sample(rng))
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    count: u64,
    sum: u128,
    sum_sq: u128,
}

impl Sums {
    fn merge(self, other: Sums) -> Sums {
        Sums {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }
}

fn run_chunk(samplers: &[SingleSampler], seed: u64, chunk: u64, trials: u64) -> Sums {
    let mut rng = chunk_rng(seed, chunk);
    let mut sums = Sums::default();
    for _ in 0..trials {
        let x = samplers
            .iter()
            .map(|s| s.sample(&mut rng))
            .max()
            .unwrap_or(0) as u128;
        sums.count += 1;
        sums.sum += x;
        sums.sum_sq += x * x;
    }
    sums
}

fn samplers_for(spec: &CollectionSpec) -> Result<Vec<SingleSampler>> {
    spec.sizes().iter().map(|&n| SingleSampler::new(n)).collect()
}

fn chunk_sizes(trials: u64) -> impl Iterator<Item = (u64, u64)> + Clone {
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    (0..chunks).map(move |c| (c, CHUNK_TRIALS.min(trials - c * CHUNK_TRIALS)))
}

fn finish(sums: Sums, seed: u64) -> Estimate {
    let n = sums.count as u128;
    let mean = sums.sum as f64 / sums.count as f64;
    // n·Σx² − (Σx)² is exact and non-negative.
    let centered = n * sums.sum_sq - sums.sum * sums.sum;
    let sample_variance = centered as f64 / (n * (n - 1)) as f64;
    Estimate {
        mean,
        sample_variance,
        stderr_mean: (sample_variance / sums.count as f64).sqrt(),
        trials: sums.count,
        seed,
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least 2 trials are required, got {trials}"
        )));
    }
    Ok(())
}

/// Estimate using the rayon thread pool.
pub fn estimate_parallel(spec: &CollectionSpec, trials: u64, seed: u64) -> Result<Estimate> {
    check_trials(trials)?;
    let samplers = samplers_for(spec)?;
    let sums = chunk_sizes(trials)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(chunk, size)| run_chunk(&samplers, seed, chunk, size))
        .reduce(Sums::default, Sums::merge);
    Ok(finish(sums, seed))
}

/// Same estimate on the calling thread.
pub fn estimate_sequential(spec: &CollectionSpec, trials: u64, seed: u64) -> Result<Estimate> {
    check_trials(trials)?;
    let samplers = samplers_for(spec)?;
    let sums = chunk_sizes(trials)
        .map(|(chunk, size)| run_chunk(&samplers, seed, chunk, size))
        .fold(Sums::default(), Sums::merge);
    Ok(finish(sums, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_coupon_is_one_draw() {
        let mut rng = chunk_rng(7, 0);
        for _ in 0..100 {
            assert_eq!(sample_single(1, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn support_lower_bound_is_attained() {
        for n in 1..=10 {
            let sampler = SingleSampler::new(n).unwrap();
            let mut rng = chunk_rng(n, 3);
            let draws: Vec<u64> = (0..2_000).map(|_| sampler.sample(&mut rng)).collect();
            assert!(draws.iter().all(|&x| x >= n));
            if n <= 5 {
                assert_eq!(*draws.iter().min().unwrap(), n, "N={n}");
            }
        }
    }

    #[test]
    fn degenerate_spec_has_zero_variance() {
        let spec = CollectionSpec::new(vec![1, 1, 1]).unwrap();
        let est = estimate_parallel(&spec, 1_000, 5).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.sample_variance, 0.0);
        assert_eq!(est.stderr_mean, 0.0);
    }

    #[test]
    fn parallel_and_sequential_are_bit_identical() {
        let spec = CollectionSpec::new(vec![6, 4]).unwrap();
        let trials = 3 * CHUNK_TRIALS + 17;
        let a = estimate_parallel(&spec, trials, 99).unwrap();
        let b = estimate_sequential(&spec, trials, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, estimate_parallel(&spec, trials, 99).unwrap());
        assert_eq!(a.trials, trials);
    }

    #[test]
    fn different_seeds_give_different_streams() {
        let spec = CollectionSpec::new(vec![6]).unwrap();
        let a = estimate_sequential(&spec, 1_000, 1).unwrap();
        let b = estimate_sequential(&spec, 1_000, 2).unwrap();
        assert_ne!(a.mean, b.mean);
    }

    #[test]
    fn geometric_inversion_mean() {
        // p = 1/4, mean 4.
        let lf = 0.75f64.ln();
        let mut rng = chunk_rng(11, 0);
        let n = 200_000;
        let total: u64 = (0..n).map(|_| geometric_by_inversion(lf, &mut rng)).sum();
        let mean = total as f64 / n as f64;
        // sd = sqrt(12)/sqrt(n) ≈ 0.0077
        assert!((mean - 4.0).abs() < 0.04, "{mean}");
    }

    #[test]
    fn trials_are_validated() {
        let spec = CollectionSpec::new(vec![3]).unwrap();
        assert!(estimate_parallel(&spec, 1, 0).is_err());
        assert!(estimate_parallel(&spec, 2, 0).is_ok());
    }
}
