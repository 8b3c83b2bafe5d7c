//! Monte Carlo simulation of up/right random walks and the proportions of
//! k-free and twin k-free points along them.
//!
//! Each trial's random stream is derived from `(base_seed, trial_index)`
//! through an avalanche mix, so trials are independent work items and every
//! result is bit-identical regardless of how they are scheduled across
//! threads. k-freeness of the running gcd is decided by trial division
//! against a small prime list, a route deliberately separate from the
//! sieved tables used by the exact engine.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::{gcd, CompensatedSum};

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error("alpha must satisfy 0 < alpha < 1, got {alpha}")]
    InvalidAlpha { alpha: f64 },
    #[error("walk length, trial count and k must all be at least 1")]
    InvalidParameter,
    #[error("failed to build thread pool: {0}")]
    ThreadPool(String),
}

/// Ensemble parameters. `steps` is the number of walk points that enter the
/// k-free proportion; the walk itself takes `steps + 1` moves so the twin
/// proportion has its final pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub alpha: f64,
    pub k: u32,
    pub steps: usize,
    pub trials: u64,
    pub base_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(McError::InvalidAlpha { alpha: self.alpha });
        }
        if self.steps == 0 || self.trials == 0 || self.k == 0 {
            return Err(McError::InvalidParameter);
        }
        Ok(())
    }
}

/// Observed proportions for one walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: u64,
    /// Proportion of k-free points among the first `steps` points.
    pub s_bar: f64,
    /// Proportion of twin k-free adjacent pairs among the first `steps + 1`
    /// points.
    pub t_bar: f64,
    /// Walk position after `steps + 1` moves; coordinates sum to `steps + 1`.
    pub final_point: (u64, u64),
}

/// Cross-trial statistics, reduced in trial order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_s: f64,
    pub mean_t: f64,
    pub stddev_s: f64,
    pub stddev_t: f64,
    pub stderr_s: f64,
    pub stderr_t: f64,
    pub trials: u64,
    pub config: WalkConfig,
}

/// SplitMix64: 64-bit counter stream through an avalanche finalizer.
#[derive(Debug, Clone)]
struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Per-trial seed: the trial counter folded into the base seed and pushed
/// through the same avalanche, so neighboring trials get unrelated streams.
fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    let mut mix = SplitMix64::new(base_seed ^ trial_index.wrapping_mul(0xA24B_AED4_963E_E407));
    mix.next_u64()
}

/// Primes up to `limit` by a plain sieve; enough for trial division of any
/// gcd the walk can produce.
fn small_primes(limit: u64) -> Vec<u64> {
    let limit = limit.max(2) as usize;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for p in 2..=limit {
        if !composite[p] {
            primes.push(p as u64);
            let mut m = p * p;
            while m <= limit {
                composite[m] = true;
                m += p;
            }
        }
    }
    primes
}

/// Whether `g` is k-free, by trial division over the supplied primes. The
/// list must cover √g; for k ≥ 2 any prime with p^k | g satisfies p ≤ √g,
/// and k = 1 reduces to g == 1.
pub fn kfree_by_trial_division(g: u64, k: u32, primes: &[u64]) -> bool {
    if k == 1 {
        return g == 1;
    }
    let mut g = g;
    for &p in primes {
        if p * p > g {
            break;
        }
        if g.is_multiple_of(p) {
            let mut e = 0;
            while g.is_multiple_of(p) {
                g /= p;
                e += 1;
            }
            if e >= k {
                return false;
            }
        }
    }
    true
}

/// Simulates one walk of `steps + 1` moves.
pub fn run_walk(config: &WalkConfig, trial_index: u64) -> TrialResult {
    let primes = small_primes(isqrt(config.steps as u64 + 1) + 1);
    run_walk_with_primes(config, trial_index, &primes)
}

fn run_walk_with_primes(config: &WalkConfig, trial_index: u64, primes: &[u64]) -> TrialResult {
    let mut rng = SplitMix64::new(trial_seed(config.base_seed, trial_index));
    let n = config.steps;
    let mut x = 0u64;
    let mut y = 0u64;
    let mut kfree_count = 0u64;
    let mut twin_count = 0u64;
    let mut prev_kfree = false;
    for step in 1..=n + 1 {
        if rng.next_unit() < config.alpha {
            x += 1;
        } else {
            y += 1;
        }
        debug_assert_eq!(x + y, step as u64);
        // gcd is recomputed per step; it is not incrementally maintainable.
        let here_kfree = kfree_by_trial_division(gcd(x, y), config.k, primes);
        if here_kfree {
            if step <= n {
                kfree_count += 1;
            }
            if prev_kfree && step >= 2 {
                twin_count += 1;
            }
        }
        prev_kfree = here_kfree;
    }
    TrialResult {
        trial_index,
        s_bar: kfree_count as f64 / n as f64,
        t_bar: twin_count as f64 / n as f64,
        final_point: (x, y),
    }
}

/// Runs all trials (in parallel when a pool is available) and aggregates in
/// trial order. Identical `(config, base_seed)` give identical output for
/// any thread count.
pub fn run_trials(config: &WalkConfig) -> Result<(Vec<TrialResult>, Aggregate), McError> {
    config.validate()?;
    let primes = small_primes(isqrt(config.steps as u64 + 1) + 1);
    let simulate = || -> Vec<TrialResult> {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| run_walk_with_primes(config, trial, &primes))
            .collect()
    };
    let results = match config.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| McError::ThreadPool(e.to_string()))?
            .install(simulate),
        None => simulate(),
    };
    let aggregate = aggregate(config, &results);
    Ok((results, aggregate))
}

fn aggregate(config: &WalkConfig, results: &[TrialResult]) -> Aggregate {
    let trials = results.len() as u64;
    let nf = trials as f64;
    let mut sum_s = CompensatedSum::new();
    let mut sum_t = CompensatedSum::new();
    for r in results {
        sum_s.add(r.s_bar);
        sum_t.add(r.t_bar);
    }
    let mean_s = sum_s.total() / nf;
    let mean_t = sum_t.total() / nf;
    let (mut var_s, mut var_t) = (CompensatedSum::new(), CompensatedSum::new());
    for r in results {
        var_s.add((r.s_bar - mean_s).powi(2));
        var_t.add((r.t_bar - mean_t).powi(2));
    }
    let (stddev_s, stddev_t) = if trials > 1 {
        (
            (var_s.total() / (nf - 1.0)).sqrt(),
            (var_t.total() / (nf - 1.0)).sqrt(),
        )
    } else {
        (0.0, 0.0)
    };
    Aggregate {
        mean_s,
        mean_t,
        stddev_s,
        stddev_t,
        stderr_s: stddev_s / nf.sqrt(),
        stderr_t: stddev_t / nf.sqrt(),
        trials,
        config: config.clone(),
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    while r * r > n {
        r -= 1;
    }
    r
}
