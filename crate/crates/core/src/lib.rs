//! Library for studying k-free lattice points along up/right random walks
//! in the integer plane.
//!
//! A nonzero lattice point is k-free when the gcd of its coordinates is not
//! divisible by any k-th prime power. The crate provides four routes to the
//! asymptotic proportions of k-free and twin k-free points on a walk:
//!
//! * [`arith`] — sieved arithmetic functions (Möbius, k-free flags, the
//!   multiplicative kernel `gk` and its divisor average `fk`) together with
//!   independent direct-enumeration oracles and exact partial sums.
//! * [`constants`] — the limit constants `1/ζ(2k)` and `∏_p (1 − 2 p^{−2k})`
//!   as truncated Euler products with certified truncation error.
//! * [`binom`] — binomial step-count kernels `C_α(n, s)` and the residue and
//!   gcd-constrained sums over them that drive the expectation analysis.
//! * [`exact`] — exact expectations and variances of the walk statistics,
//!   checked against an exhaustive path-enumeration oracle.
//! * [`montecarlo`] — deterministic, parallel Monte Carlo simulation of the
//!   walks themselves.

pub mod arith;
pub mod binom;
pub mod constants;
pub mod exact;
pub mod montecarlo;
pub mod util;
