//! The two limit constants as truncated Euler products with certified
//! truncation error.
//!
//! `inv_zeta_2k(k)` evaluates `∏_{p ≤ P} (1 − p^{−2k}) = 1/ζ(2k) + O(tail)`
//! and `twin_product(k)` evaluates `∏_{p ≤ P} (1 − 2 p^{−2k})`, choosing the
//! prime cutoff `P` so that a rigorous integral-comparison bound on the
//! discarded factors is at most the requested tolerance. Products accumulate
//! as compensated sums of `ln(1 - x)` terms to keep rounding far below any
//! practical tolerance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::CompensatedSum;

/// Largest prime cutoff the sieve will attempt.
pub const DEFAULT_CUTOFF_CAP: u64 = 10_000_000_000;

/// Odd numbers per sieve segment (1 << 19 odds = 64 KiB of flags).
const SEGMENT_ODDS: u64 = 1 << 19;

#[derive(Debug, Error, PartialEq)]
pub enum ConstantsError {
    #[error("tolerance {tol:e} needs prime cutoff {required}, above the cap {cap}")]
    ToleranceUnreachable { tol: f64, required: u64, cap: u64 },
    #[error("tolerance must be positive and finite")]
    InvalidTolerance,
    #[error("k must be at least 1")]
    InvalidK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    InvZeta2k,
    TwinProduct,
}

/// A truncated Euler product together with a rigorous bound on the
/// distance to the infinite product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantResult {
    pub kind: ConstantKind,
    pub k: u32,
    pub value: f64,
    pub tail_bound: f64,
    pub prime_cutoff: u64,
}

/// `1/ζ(2k)` to within `tol`, with the default cutoff cap.
pub fn inv_zeta_2k(k: u32, tol: f64) -> Result<ConstantResult, ConstantsError> {
    inv_zeta_2k_capped(k, tol, DEFAULT_CUTOFF_CAP)
}

pub fn inv_zeta_2k_capped(k: u32, tol: f64, cap: u64) -> Result<ConstantResult, ConstantsError> {
    let cutoff = required_cutoff(k, tol, cap, 1.0)?;
    Ok(inv_zeta_2k_at_cutoff(k, cutoff))
}

/// Truncated product over `p ≤ cutoff` with the tail bound implied by the
/// cutoff: Σ_{n > P} n^{−2k} ≤ P^{1−2k}/(2k−1).
pub fn inv_zeta_2k_at_cutoff(k: u32, cutoff: u64) -> ConstantResult {
    assert!(k >= 1);
    let exponent = 2 * k as i32;
    let value = truncated_product(cutoff, move |p| {
        (-(p as f64).powi(exponent).recip()).ln_1p()
    });
    let result = ConstantResult {
        kind: ConstantKind::InvZeta2k,
        k,
        value,
        tail_bound: integer_tail(k, cutoff, 1.0),
        prime_cutoff: cutoff,
    };
    debug_assert!(result.value > 0.0 && result.value < 1.0);
    result
}

/// `∏_p (1 − 2 p^{−2k})` to within `tol`, with the default cutoff cap.
pub fn twin_product(k: u32, tol: f64) -> Result<ConstantResult, ConstantsError> {
    twin_product_capped(k, tol, DEFAULT_CUTOFF_CAP)
}

pub fn twin_product_capped(k: u32, tol: f64, cap: u64) -> Result<ConstantResult, ConstantsError> {
    let cutoff = required_cutoff(k, tol, cap, 4.0)?;
    Ok(twin_product_at_cutoff(k, cutoff))
}

/// Truncated twin product over `p ≤ cutoff`. Since every factor has
/// `x = 2p^{−2k} ≤ 1/2`, `−ln(1−x) ≤ 2x`, so the discarded log mass is at
/// most Σ_{n > P} 4 n^{−2k}, bounded by integral comparison.
pub fn twin_product_at_cutoff(k: u32, cutoff: u64) -> ConstantResult {
    assert!(k >= 1);
    let cutoff = cutoff.max(2);
    let exponent = 2 * k as i32;
    let value = truncated_product(cutoff, move |p| {
        (-2.0 * (p as f64).powi(exponent).recip()).ln_1p()
    });
    let result = ConstantResult {
        kind: ConstantKind::TwinProduct,
        k,
        value,
        tail_bound: integer_tail(k, cutoff, 4.0),
        prime_cutoff: cutoff,
    };
    debug_assert!(result.value > 0.0 && result.value < 1.0);
    result
}

/// Integral comparison: Σ_{n > P} c·n^{−2k} ≤ c·P^{1−2k}/(2k−1).
fn integer_tail(k: u32, cutoff: u64, c: f64) -> f64 {
    let s = 2.0 * k as f64;
    c * (cutoff as f64).powf(1.0 - s) / (s - 1.0)
}

/// Smallest cutoff whose tail bound meets `tol`, at least 2.
fn required_cutoff(k: u32, tol: f64, cap: u64, c: f64) -> Result<u64, ConstantsError> {
    if k == 0 {
        return Err(ConstantsError::InvalidK);
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(ConstantsError::InvalidTolerance);
    }
    let s = 2.0 * k as f64;
    let approx = (c / ((s - 1.0) * tol)).powf(1.0 / (s - 1.0));
    if !approx.is_finite() || approx > cap as f64 * 2.0 + 16.0 {
        return Err(ConstantsError::ToleranceUnreachable {
            tol,
            required: approx.min(u64::MAX as f64) as u64,
            cap,
        });
    }
    let mut cutoff = (approx.ceil().max(2.0)) as u64;
    while integer_tail(k, cutoff, c) > tol {
        cutoff += 1;
    }
    while cutoff > 2 && integer_tail(k, cutoff - 1, c) <= tol {
        cutoff -= 1;
    }
    if cutoff > cap {
        return Err(ConstantsError::ToleranceUnreachable {
            tol,
            required: cutoff,
            cap,
        });
    }
    Ok(cutoff)
}

/// exp of the compensated sum of `log_term(p)` over all primes `p ≤ cutoff`.
///
/// Primes come from a segmented sieve over odd numbers; segments are
/// processed in parallel but partial sums are merged in segment order, so
/// the result does not depend on the thread count.
fn truncated_product(cutoff: u64, log_term: impl Fn(u64) -> f64 + Sync) -> f64 {
    let mut total = CompensatedSum::new();
    if cutoff >= 2 {
        total.add(log_term(2));
    }
    if cutoff >= 3 {
        let base = base_primes(isqrt(cutoff));
        let last_odd = if cutoff.is_multiple_of(2) {
            cutoff - 1
        } else {
            cutoff
        };
        let segment_count = (last_odd - 3) / (2 * SEGMENT_ODDS) + 1;
        let partials: Vec<CompensatedSum> = (0..segment_count)
            .into_par_iter()
            .map(|seg| {
                let lo = 3 + seg * 2 * SEGMENT_ODDS;
                let hi = (lo + 2 * SEGMENT_ODDS - 2).min(last_odd);
                segment_sum(lo, hi, &base, &log_term)
            })
            .collect();
        for partial in &partials {
            total.merge(partial);
        }
    }
    total.total().exp()
}

/// Compensated sum of `log_term` over primes in the odd range `[lo, hi]`.
fn segment_sum(
    lo: u64,
    hi: u64,
    base: &[u64],
    log_term: &(impl Fn(u64) -> f64 + Sync),
) -> CompensatedSum {
    debug_assert!(lo % 2 == 1);
    let len = ((hi - lo) / 2 + 1) as usize;
    let mut composite = vec![false; len];
    for &p in base {
        let p2 = p * p;
        if p2 > hi {
            break;
        }
        let mut m = lo.div_ceil(p) * p;
        if m < p2 {
            m = p2;
        }
        if m % 2 == 0 {
            m += p;
        }
        while m <= hi {
            composite[((m - lo) / 2) as usize] = true;
            m += 2 * p;
        }
    }
    let mut acc = CompensatedSum::new();
    for (i, &flag) in composite.iter().enumerate() {
        if !flag {
            acc.add(log_term(lo + 2 * i as u64));
        }
    }
    acc
}

/// Odd primes up to `limit` by a plain sieve (base primes for segments).
fn base_primes(limit: u64) -> Vec<u64> {
    if limit < 3 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut is_composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for p in (3..=limit).step_by(2) {
        if !is_composite[p] {
            primes.push(p as u64);
            let mut m = p * p;
            while m <= limit {
                is_composite[m] = true;
                m += 2 * p;
            }
        }
    }
    primes
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
