//! Exact (up to float rounding) expectations and variances of the walk
//! statistics: the probability that step `i` is k-free, the expected k-free
//! and twin k-free proportions over `n` steps, pairwise joint probabilities,
//! and a variance via the exact second-moment decomposition.
//!
//! Everything here reduces a walk question to sums over binomial kernels
//! using the fact that the point after `i` steps is `(l, i-l)` with
//! probability `C_α(i, l)` and `gcd(l, i-l) = gcd(l, i)`. The one deliberate
//! exception is [`enumerate_paths`], a ground-truth oracle that walks all
//! `2^n` paths with trial-division k-free tests and never touches the
//! kernel or the sieve tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{ArithError, ArithTables};
use crate::binom::{BinomKernel, KernelError};
use crate::util::{gcd, pairwise_sum, CompensatedSum};

/// Exhaustive path enumeration is capped at 2^20 paths.
pub const PATH_ENUM_CAP: usize = 20;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("step index {i} out of range for tables with limit {limit}")]
    StepOutOfRange { i: usize, limit: usize },
    #[error("path enumeration supports up to {cap} steps, got {n}")]
    PathEnumCapExceeded { n: usize, cap: usize },
    #[error("n must be at least 1")]
    ZeroSteps,
    #[error("grid must be nonempty and strictly increasing")]
    InvalidGrid,
}

/// P(step `i` of the walk is k-free): the kernel sum over `l` with
/// `gcd(l, i)` k-free. `gcd(0, i) = i`, so the axis points are k-free
/// exactly when `i` is.
pub fn kfree_prob_at_step(i: usize, alpha: f64, tables: &ArithTables) -> Result<f64, ExactError> {
    check_step(i, tables)?;
    let kernel = BinomKernel::new(alpha, i)?;
    let mut acc = CompensatedSum::new();
    for l in 0..=i {
        if tables.is_kfree(gcd(l as u64, i as u64)) {
            acc.add(kernel.weight(l));
        }
    }
    Ok(acc.total())
}

/// Expected proportion of k-free points among the first `n` steps. Cost is
/// quadratic in `n`; the step loop runs in parallel with an order-fixed
/// reduction, so results do not depend on thread count.
pub fn expected_kfree_proportion(
    n: usize,
    alpha: f64,
    tables: &ArithTables,
) -> Result<f64, ExactError> {
    check_step(n, tables)?;
    let per_step: Vec<f64> = (1..=n)
        .into_par_iter()
        .map(|i| kfree_prob_at_step(i, alpha, tables))
        .collect::<Result<_, _>>()?;
    Ok(pairwise_sum(&per_step) / n as f64)
}

/// P(steps `i` and `i+1` are both k-free). Conditioning on the point after
/// `i` steps, the final move contributes `(1-α)` staying at x-coordinate
/// `l` and `α` moving to `l+1`.
pub fn twin_kfree_prob_at_step(
    i: usize,
    alpha: f64,
    tables: &ArithTables,
) -> Result<f64, ExactError> {
    check_step(i + 1, tables)?;
    if i == 0 {
        return Err(ExactError::ZeroSteps);
    }
    let kernel = BinomKernel::new(alpha, i)?;
    let next = (i + 1) as u64;
    let mut acc = CompensatedSum::new();
    for l in 0..=i {
        if !tables.is_kfree(gcd(l as u64, i as u64)) {
            continue;
        }
        let mut conditional = 0.0;
        if tables.is_kfree(gcd(l as u64, next)) {
            conditional += 1.0 - alpha;
        }
        if tables.is_kfree(gcd(l as u64 + 1, next)) {
            conditional += alpha;
        }
        acc.add(kernel.weight(l) * conditional);
    }
    Ok(acc.total())
}

/// Expected proportion of twin k-free pairs among the first `n+1` steps.
pub fn expected_twin_proportion(
    n: usize,
    alpha: f64,
    tables: &ArithTables,
) -> Result<f64, ExactError> {
    check_step(n + 1, tables)?;
    if n == 0 {
        return Err(ExactError::ZeroSteps);
    }
    let per_step: Vec<f64> = (1..=n)
        .into_par_iter()
        .map(|i| twin_kfree_prob_at_step(i, alpha, tables))
        .collect::<Result<_, _>>()?;
    Ok(pairwise_sum(&per_step) / n as f64)
}

/// P(steps `i` and `j` are both k-free) for `i < j`, by the exact double
/// kernel sum over the intermediate displacement. Cost O(i · (j − i)).
pub fn joint_kfree_prob(
    i: usize,
    j: usize,
    alpha: f64,
    tables: &ArithTables,
) -> Result<f64, ExactError> {
    assert!(i >= 1 && i < j, "need 1 <= i < j");
    check_step(j, tables)?;
    let first = BinomKernel::new(alpha, i)?;
    let bridge = BinomKernel::new(alpha, j - i)?;
    let mut acc = CompensatedSum::new();
    for l in 0..=i {
        if !tables.is_kfree(gcd(l as u64, i as u64)) {
            continue;
        }
        let mut inner = CompensatedSum::new();
        for m in 0..=(j - i) {
            if tables.is_kfree(gcd((l + m) as u64, j as u64)) {
                inner.add(bridge.weight(m));
            }
        }
        acc.add(first.weight(l) * inner.total());
    }
    Ok(acc.total())
}

/// The main-term approximation `fk(i) · fk(j)` to [`joint_kfree_prob`],
/// exposed separately for comparison; the variance computation never uses
/// it.
pub fn joint_kfree_prob_main_term(i: usize, j: usize, tables: &ArithTables) -> f64 {
    tables.fk_f64(i) * tables.fk_f64(j)
}

/// V(mean k-free proportion over `n` steps) via the second-moment
/// decomposition with exact pairwise joint probabilities:
/// `V = (Σ_i E X_i + 2 Σ_{i<j} E X_i X_j)/n² − (Σ_i E X_i / n)²`.
///
/// Cost is O(n⁴); the `(i, j)` grid is parallelized over `j` with a fixed
/// reduction order.
pub fn kfree_proportion_variance(
    n: usize,
    alpha: f64,
    tables: &ArithTables,
) -> Result<f64, ExactError> {
    check_step(n, tables)?;
    let kernels: Vec<BinomKernel> = (1..=n)
        .into_par_iter()
        .map(|i| BinomKernel::new(alpha, i))
        .collect::<Result<_, _>>()?;
    // kfree_flags[m-1][c] = 1.0 when gcd(c, m) is k-free, for c = 0..=m.
    let kfree_flags: Vec<Vec<f64>> = (1..=n)
        .into_par_iter()
        .map(|m| {
            (0..=m)
                .map(|c| f64::from(tables.is_kfree(gcd(c as u64, m as u64))))
                .collect()
        })
        .collect();

    let single: Vec<f64> = (1..=n)
        .map(|i| {
            let w = kernels[i - 1].weights();
            let q = &kfree_flags[i - 1];
            let mut acc = CompensatedSum::new();
            for l in 0..=i {
                if q[l] != 0.0 {
                    acc.add(w[l]);
                }
            }
            acc.total()
        })
        .collect();

    let pair_terms: Vec<f64> = (2..=n)
        .into_par_iter()
        .map(|j| {
            let qj = &kfree_flags[j - 1];
            let mut acc = CompensatedSum::new();
            for i in 1..j {
                let wi = kernels[i - 1].weights();
                let wb = kernels[j - i - 1].weights();
                let qi = &kfree_flags[i - 1];
                for l in 0..=i {
                    if qi[l] == 0.0 {
                        continue;
                    }
                    let mut dot = 0.0;
                    for (m, &w) in wb.iter().enumerate() {
                        dot += w * qj[l + m];
                    }
                    acc.add(wi[l] * dot);
                }
            }
            acc.total()
        })
        .collect();

    let sum_single = pairwise_sum(&single);
    let pair_sum = pairwise_sum(&pair_terms);
    let nf = n as f64;
    let second_moment = (sum_single + 2.0 * pair_sum) / (nf * nf);
    let mean = sum_single / nf;
    // rounding can push an exact zero slightly negative
    Ok((second_moment - mean * mean).max(0.0))
}

/// V(mean k-free proportion) by exhaustive path enumeration.
pub fn kfree_proportion_variance_enumerated(
    n: usize,
    alpha: f64,
    k: u32,
) -> Result<f64, ExactError> {
    Ok(enumerate_paths(n, alpha, k)?.variance_kfree_proportion())
}

/// V(mean twin proportion over `n` pairs) by enumerating all `2^{n+1}`
/// paths.
pub fn twin_proportion_variance_enumerated(
    n: usize,
    alpha: f64,
    k: u32,
) -> Result<f64, ExactError> {
    if n == 0 {
        return Err(ExactError::ZeroSteps);
    }
    let enumeration = enumerate_paths(n + 1, alpha, k)?;
    Ok(enumeration
        .variance_twin_proportion()
        .expect("n + 1 >= 2 steps always yield at least one pair"))
}

/// Probability-weighted statistics of every `2^n` up/right path: the
/// distributions of the k-free step count and the adjacent twin count.
///
/// Ground-truth oracle: k-freeness is decided by trial division and gcds by
/// plain Euclid, independent of the sieve tables and kernels this crate
/// otherwise uses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathEnumeration {
    pub steps: usize,
    pub alpha: f64,
    pub k: u32,
    /// `kfree_count_dist[c]` = P(exactly c of the n steps are k-free).
    pub kfree_count_dist: Vec<f64>,
    /// `twin_count_dist[c]` = P(exactly c adjacent pairs are both k-free);
    /// pairs run over steps (1,2), ..., (n-1, n).
    pub twin_count_dist: Vec<f64>,
}

impl PathEnumeration {
    /// E(k-free proportion over the n steps).
    pub fn mean_kfree_proportion(&self) -> f64 {
        moments(&self.kfree_count_dist).0 / self.steps as f64
    }

    pub fn variance_kfree_proportion(&self) -> f64 {
        let (m1, m2) = moments(&self.kfree_count_dist);
        let nf = self.steps as f64;
        ((m2 - m1 * m1) / (nf * nf)).max(0.0)
    }

    /// E(twin proportion over the n−1 adjacent pairs); `None` for n < 2.
    pub fn mean_twin_proportion(&self) -> Option<f64> {
        let pairs = self.steps.checked_sub(2)? + 1;
        Some(moments(&self.twin_count_dist).0 / pairs as f64)
    }

    pub fn variance_twin_proportion(&self) -> Option<f64> {
        let pairs = self.steps.checked_sub(2)? + 1;
        let (m1, m2) = moments(&self.twin_count_dist);
        let pf = pairs as f64;
        Some(((m2 - m1 * m1) / (pf * pf)).max(0.0))
    }
}

fn moments(dist: &[f64]) -> (f64, f64) {
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (c, &p) in dist.iter().enumerate() {
        let c = c as f64;
        m1 += p * c;
        m2 += p * c * c;
    }
    (m1, m2)
}

pub fn enumerate_paths(n: usize, alpha: f64, k: u32) -> Result<PathEnumeration, ExactError> {
    if n == 0 {
        return Err(ExactError::ZeroSteps);
    }
    if n > PATH_ENUM_CAP {
        return Err(ExactError::PathEnumCapExceeded {
            n,
            cap: PATH_ENUM_CAP,
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ExactError::Kernel(KernelError::InvalidAlpha { alpha }));
    }
    if k == 0 {
        return Err(ExactError::Arith(ArithError::InvalidParameter));
    }

    let mut pow_right = vec![1.0f64; n + 1];
    let mut pow_up = vec![1.0f64; n + 1];
    for i in 1..=n {
        pow_right[i] = pow_right[i - 1] * alpha;
        pow_up[i] = pow_up[i - 1] * (1.0 - alpha);
    }

    let mut kfree_dist = vec![CompensatedSum::new(); n + 1];
    let mut twin_dist = vec![CompensatedSum::new(); n];
    for bits in 0u64..(1u64 << n) {
        let rights = bits.count_ones() as usize;
        let prob = pow_right[rights] * pow_up[n - rights];
        let mut x = 0u64;
        let mut y = 0u64;
        let mut prev_kfree = false;
        let mut kfree_count = 0usize;
        let mut twin_count = 0usize;
        for step in 0..n {
            if bits >> step & 1 == 1 {
                x += 1;
            } else {
                y += 1;
            }
            let here_kfree = kfree_by_trial_division(gcd(x, y), k);
            if here_kfree {
                kfree_count += 1;
                if prev_kfree {
                    twin_count += 1;
                }
            }
            prev_kfree = here_kfree;
        }
        kfree_dist[kfree_count].add(prob);
        twin_dist[twin_count].add(prob);
    }

    Ok(PathEnumeration {
        steps: n,
        alpha,
        k,
        kfree_count_dist: kfree_dist.iter().map(CompensatedSum::total).collect(),
        twin_count_dist: twin_dist.iter().map(CompensatedSum::total).collect(),
    })
}

fn kfree_by_trial_division(mut g: u64, k: u32) -> bool {
    if k == 1 {
        return g == 1;
    }
    let mut p = 2u64;
    while p * p <= g {
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
        p += if p == 2 { 1 } else { 2 };
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    MeanS,
    MeanT,
    VarS,
    VarT,
}

/// Exact expectation or variance values over a grid of `n`, with residuals
/// against the limit constant (0 for the variances).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationSeries {
    pub quantity: Quantity,
    pub alpha: f64,
    pub k: u32,
    pub grid: Vec<usize>,
    pub values: Vec<f64>,
    pub limit_constant: f64,
    pub residuals: Vec<f64>,
}

pub fn expectation_series(
    quantity: Quantity,
    alpha: f64,
    tables: &ArithTables,
    grid: &[usize],
    limit_constant: f64,
) -> Result<ExpectationSeries, ExactError> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExactError::InvalidGrid);
    }
    let values: Vec<f64> = grid
        .iter()
        .map(|&n| match quantity {
            Quantity::MeanS => expected_kfree_proportion(n, alpha, tables),
            Quantity::MeanT => expected_twin_proportion(n, alpha, tables),
            Quantity::VarS => kfree_proportion_variance(n, alpha, tables),
            Quantity::VarT => twin_proportion_variance_enumerated(n, alpha, tables.k()),
        })
        .collect::<Result<_, _>>()?;
    for &v in &values {
        match quantity {
            Quantity::MeanS | Quantity::MeanT => debug_assert!((0.0..=1.0).contains(&v)),
            Quantity::VarS | Quantity::VarT => debug_assert!(v >= 0.0),
        }
    }
    let residuals = values.iter().map(|v| v - limit_constant).collect();
    Ok(ExpectationSeries {
        quantity,
        alpha,
        k: tables.k(),
        grid: grid.to_vec(),
        values,
        limit_constant,
        residuals,
    })
}

fn check_step(i: usize, tables: &ArithTables) -> Result<(), ExactError> {
    if i == 0 {
        return Err(ExactError::ZeroSteps);
    }
    if i > tables.limit() {
        return Err(ExactError::StepOutOfRange {
            i,
            limit: tables.limit(),
        });
    }
    Ok(())
}
