//! Binomial step-count kernels `C_α(n, s) = C(n, s) α^s (1−α)^{n−s}` and
//! the constrained sums over them used by the expectation analysis:
//! residue-class sums, single and double gcd-k-free sums, and general
//! coprime-moduli constraint sums with their predicted main terms.
//!
//! Linear weights are built by a multiplicative recurrence outward from the
//! mode and renormalized, which keeps the bulk accurate to a few ulp and
//! makes the weights sum to 1 up to final rounding. Log weights come from a
//! cumulative log-factorial table and are always finite even where the
//! linear weight underflows.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::arith::ArithTables;
use crate::util::{gcd, CompensatedSum};

/// Largest `n` for which exact rational weights are built.
pub const RATIONAL_N_CAP: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("alpha must satisfy 0 < alpha < 1, got {alpha}")]
    InvalidAlpha { alpha: f64 },
    #[error("rational alpha must satisfy 0 < num < den, got {num}/{den}")]
    InvalidAlphaRatio { num: u64, den: u64 },
    #[error("rational mode supports n up to {cap}, got {n}")]
    RationalCapExceeded { n: usize, cap: usize },
    #[error("residue class ({r} mod {d}) invalid for kernel length {n}: need 1 <= d <= n, r < d")]
    InvalidResidueClass { d: usize, r: usize, n: usize },
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("modulus {modulus} exceeds table limit {limit}")]
    ModulusOutOfRange { modulus: u64, limit: usize },
    #[error("moduli {u1} and {u2} are not coprime")]
    NonCoprimeModuli { u1: u64, u2: u64 },
    #[error("target {target} does not divide modulus {modulus}")]
    TargetNotDivisor { target: u64, modulus: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    LogFloat,
    ExactRational,
}

/// One gcd constraint of the form `gcd(s + shift, modulus) = target`.
#[derive(Debug, Clone, Copy)]
pub struct ResidueConstraint {
    pub shift: i64,
    pub modulus: u64,
    pub target: u64,
}

/// The binomial weights for a fixed `(α, n)`, immutable after build.
#[derive(Debug, Clone)]
pub struct BinomKernel {
    alpha: f64,
    n: usize,
    mode: KernelMode,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    rational: Option<RationalWeights>,
}

#[derive(Debug, Clone)]
struct RationalWeights {
    alpha_num: u64,
    alpha_den: u64,
    weights: Vec<BigRational>,
}

impl BinomKernel {
    /// Float-mode kernel.
    pub fn new(alpha: f64, n: usize) -> Result<Self, KernelError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(KernelError::InvalidAlpha { alpha });
        }
        let (weights, log_weights) = build_float_weights(alpha, n);
        Ok(Self {
            alpha,
            n,
            mode: KernelMode::LogFloat,
            weights,
            log_weights,
            rational: None,
        })
    }

    /// Exact-rational kernel for `alpha = num/den`; float fields are filled
    /// from the same ratio so both views coexist.
    pub fn new_rational(num: u64, den: u64, n: usize) -> Result<Self, KernelError> {
        if num == 0 || num >= den {
            return Err(KernelError::InvalidAlphaRatio { num, den });
        }
        if n > RATIONAL_N_CAP {
            return Err(KernelError::RationalCapExceeded {
                n,
                cap: RATIONAL_N_CAP,
            });
        }
        let alpha = num as f64 / den as f64;
        let mut kernel = Self::new(alpha, n)?;
        kernel.mode = KernelMode::ExactRational;
        kernel.rational = Some(RationalWeights {
            alpha_num: num,
            alpha_den: den,
            weights: build_rational_weights(num, den, n),
        });
        Ok(kernel)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    /// `C_α(n, s)`; may underflow to zero in the extreme tails for large n.
    #[inline]
    pub fn weight(&self, s: usize) -> f64 {
        self.weights[s]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `ln C_α(n, s)`, finite for every s.
    pub fn log_weight(&self, s: usize) -> f64 {
        self.log_weights[s]
    }

    pub fn rational_alpha(&self) -> Option<(u64, u64)> {
        self.rational.as_ref().map(|r| (r.alpha_num, r.alpha_den))
    }

    pub fn rational_weights(&self) -> Option<&[BigRational]> {
        self.rational.as_ref().map(|r| r.weights.as_slice())
    }

    /// `max_s C_α(n, s)`, which decays like `1/√n`.
    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// `Σ_{s ≡ r (mod d)} C_α(n, s)`.
    pub fn residue_class_sum(&self, d: usize, r: usize) -> Result<f64, KernelError> {
        if d == 0 || d > self.n.max(1) || r >= d {
            return Err(KernelError::InvalidResidueClass { d, r, n: self.n });
        }
        let mut acc = CompensatedSum::new();
        let mut s = r;
        while s <= self.n {
            acc.add(self.weights[s]);
            s += d;
        }
        Ok(acc.total())
    }

    /// Exact residue-class sum; only in rational mode.
    pub fn residue_class_sum_rational(&self, d: usize, r: usize) -> Option<BigRational> {
        let rational = self.rational.as_ref()?;
        let mut acc = BigRational::zero();
        let mut s = r;
        while s <= self.n {
            acc += rational.weights[s].clone();
            s += d;
        }
        Some(acc)
    }

    /// `Σ_{m: gcd(m + shift, modulus) is k-free} C_α(n, m)`, the single-gcd
    /// constrained sum; its main term is `fk(modulus)`.
    pub fn gcd_kfree_sum(
        &self,
        shift: i64,
        modulus: u64,
        tables: &ArithTables,
    ) -> Result<f64, KernelError> {
        self.check_modulus(modulus, tables)?;
        let mut acc = CompensatedSum::new();
        for m in 0..=self.n {
            let g = shifted_gcd(m, shift, modulus);
            if tables.is_kfree(g) {
                acc.add(self.weights[m]);
            }
        }
        Ok(acc.total())
    }

    /// Two simultaneous gcd-k-free constraints with coprime moduli; the main
    /// term is `fk(modulus1) · fk(modulus2)` and coprimality is required.
    pub fn double_gcd_kfree_sum(
        &self,
        shift1: i64,
        modulus1: u64,
        shift2: i64,
        modulus2: u64,
        tables: &ArithTables,
    ) -> Result<f64, KernelError> {
        self.check_modulus(modulus1, tables)?;
        self.check_modulus(modulus2, tables)?;
        if gcd(modulus1, modulus2) != 1 {
            return Err(KernelError::NonCoprimeModuli {
                u1: modulus1,
                u2: modulus2,
            });
        }
        let mut acc = CompensatedSum::new();
        for m in 0..=self.n {
            let g1 = shifted_gcd(m, shift1, modulus1);
            if !tables.is_kfree(g1) {
                continue;
            }
            let g2 = shifted_gcd(m, shift2, modulus2);
            if tables.is_kfree(g2) {
                acc.add(self.weights[m]);
            }
        }
        Ok(acc.total())
    }

    /// `Σ_{s: gcd(s + a_j, u_j) = d_j ∀j} C_α(n, s)` for pairwise coprime
    /// moduli `u_j`; compare with [`coprime_moduli_main_term`].
    pub fn coprime_moduli_sum(
        &self,
        constraints: &[ResidueConstraint],
    ) -> Result<f64, KernelError> {
        validate_constraints(constraints)?;
        let mut acc = CompensatedSum::new();
        'outer: for s in 0..=self.n {
            for c in constraints {
                if shifted_gcd(s, c.shift, c.modulus) != c.target {
                    continue 'outer;
                }
            }
            acc.add(self.weights[s]);
        }
        Ok(acc.total())
    }

    fn check_modulus(&self, modulus: u64, tables: &ArithTables) -> Result<(), KernelError> {
        if modulus == 0 {
            return Err(KernelError::ZeroModulus);
        }
        if modulus > tables.limit() as u64 {
            return Err(KernelError::ModulusOutOfRange {
                modulus,
                limit: tables.limit(),
            });
        }
        Ok(())
    }
}

/// Predicted main term of [`BinomKernel::coprime_moduli_sum`]:
/// `(1/∏ d_j) ∏_j Σ_{r | u_j/d_j} μ(r)/r`, where each inner sum collapses
/// to `∏_{p | u_j/d_j} (1 − 1/p)`.
pub fn coprime_moduli_main_term(constraints: &[ResidueConstraint]) -> Result<f64, KernelError> {
    validate_constraints(constraints)?;
    let mut main = 1.0;
    for c in constraints {
        main /= c.target as f64;
        let mut m = c.modulus / c.target;
        let mut p = 2u64;
        while p * p <= m {
            if m % p == 0 {
                main *= 1.0 - 1.0 / p as f64;
                while m % p == 0 {
                    m /= p;
                }
            }
            p += 1;
        }
        if m > 1 {
            main *= 1.0 - 1.0 / m as f64;
        }
    }
    Ok(main)
}

fn validate_constraints(constraints: &[ResidueConstraint]) -> Result<(), KernelError> {
    for c in constraints {
        if c.modulus == 0 {
            return Err(KernelError::ZeroModulus);
        }
        if c.target == 0 || c.modulus % c.target != 0 {
            return Err(KernelError::TargetNotDivisor {
                target: c.target,
                modulus: c.modulus,
            });
        }
    }
    for (i, a) in constraints.iter().enumerate() {
        for b in &constraints[i + 1..] {
            if gcd(a.modulus, b.modulus) != 1 {
                return Err(KernelError::NonCoprimeModuli {
                    u1: a.modulus,
                    u2: b.modulus,
                });
            }
        }
    }
    Ok(())
}

/// `gcd(m + shift, modulus)` with the representative reduced mod `modulus`,
/// so negative shifts are fine; equals `modulus` on the zero class.
#[inline]
fn shifted_gcd(m: usize, shift: i64, modulus: u64) -> u64 {
    let x = (m as i64 + shift).rem_euclid(modulus as i64) as u64;
    gcd(x, modulus)
}

fn build_float_weights(alpha: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let beta = 1.0 - alpha;
    if n == 0 {
        return (vec![1.0], vec![0.0]);
    }

    // Raw weights by recurrence outward from the mode, then renormalize.
    let mode = (((n + 1) as f64) * alpha).floor().min(n as f64) as usize;
    let mut raw = vec![0.0f64; n + 1];
    raw[mode] = 1.0;
    for s in (1..=mode).rev() {
        // C(n, s-1)/C(n, s) = s(1-a) / ((n-s+1) a)
        raw[s - 1] = raw[s] * (s as f64 * beta) / ((n - s + 1) as f64 * alpha);
    }
    for s in mode + 1..=n {
        raw[s] = raw[s - 1] * ((n - s + 1) as f64 * alpha) / (s as f64 * beta);
    }
    let mut total = CompensatedSum::new();
    for &w in &raw {
        total.add(w);
    }
    let total = total.total();
    for w in raw.iter_mut() {
        *w /= total;
    }

    // Cumulative log-factorials: lf[i] = ln(i!).
    let mut lf = Vec::with_capacity(n + 1);
    let mut acc = CompensatedSum::new();
    lf.push(0.0);
    for j in 1..=n {
        acc.add((j as f64).ln());
        lf.push(acc.total());
    }
    let ln_alpha = alpha.ln();
    let ln_beta = (-alpha).ln_1p();
    let log_weights = (0..=n)
        .map(|s| lf[n] - lf[s] - lf[n - s] + s as f64 * ln_alpha + (n - s) as f64 * ln_beta)
        .collect();

    (raw, log_weights)
}

fn build_rational_weights(num: u64, den: u64, n: usize) -> Vec<BigRational> {
    let p = BigInt::from(num);
    let q = BigInt::from(den - num);
    let den_pow_n = BigInt::from(den).pow(n as u32);

    let mut binom = BigInt::one();
    let mut weights = Vec::with_capacity(n + 1);
    for s in 0..=n {
        let numerator = binom.clone() * p.pow(s as u32) * q.pow((n - s) as u32);
        weights.push(BigRational::new(numerator, den_pow_n.clone()));
        if s < n {
            binom = binom * BigInt::from((n - s) as u64) / BigInt::from((s + 1) as u64);
        }
    }
    weights
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn big_rat(num: i64, den: i64) -> BigRational {
        BigRational::new(num.into(), den.into())
    }

    #[test]
    fn fair_coin_two_steps() {
        let kernel = BinomKernel::new(0.5, 2).unwrap();
        assert_eq!(kernel.weights(), &[0.25, 0.5, 0.25]);
        assert_eq!(kernel.max_weight(), 0.5);
    }

    #[test]
    fn single_step_weights() {
        let kernel = BinomKernel::new(0.3, 1).unwrap();
        assert!((kernel.weight(0) - 0.7).abs() < 1e-15);
        assert!((kernel.weight(1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rational_third_cubed() {
        let kernel = BinomKernel::new_rational(1, 3, 3).unwrap();
        let expected = [
            big_rat(8, 27),
            big_rat(12, 27),
            big_rat(6, 27),
            big_rat(1, 27),
        ];
        assert_eq!(kernel.rational_weights().unwrap(), &expected);
        assert_eq!(kernel.mode(), KernelMode::ExactRational);
        assert_eq!(kernel.rational_alpha(), Some((1, 3)));
    }

    #[test]
    fn rational_weights_sum_to_one_exactly() {
        for (num, den, n) in [(1u64, 2u64, 10usize), (1, 3, 17), (3, 7, 25), (5, 8, 64)] {
            let kernel = BinomKernel::new_rational(num, den, n).unwrap();
            let total: BigRational = kernel.rational_weights().unwrap().iter().sum();
            assert!(total.is_one(), "alpha={num}/{den}, n={n}");
        }
    }

    #[test]
    fn float_and_rational_agree() {
        for (num, den) in [(1u64, 2u64), (1, 3), (2, 3), (3, 7)] {
            for n in [1usize, 5, 12, 20] {
                let kernel = BinomKernel::new_rational(num, den, n).unwrap();
                let rats = kernel.rational_weights().unwrap();
                for (s, rat) in rats.iter().enumerate() {
                    let exact = rat.to_f64().unwrap();
                    assert!(
                        (kernel.weight(s) - exact).abs() < 1e-12,
                        "alpha={num}/{den}, n={n}, s={s}"
                    );
                }
            }
        }
    }

    #[test]
    fn float_and_rational_sums_agree() {
        for (num, den) in [(1u64, 2u64), (1, 3), (3, 7)] {
            for n in [5usize, 12, 20] {
                let kernel = BinomKernel::new_rational(num, den, n).unwrap();
                for d in 1..=n.min(6) {
                    for r in 0..d {
                        let float = kernel.residue_class_sum(d, r).unwrap();
                        let exact = kernel
                            .residue_class_sum_rational(d, r)
                            .unwrap()
                            .to_f64()
                            .unwrap();
                        assert!(
                            (float - exact).abs() < 1e-12,
                            "alpha={num}/{den}, n={n}, d={d}, r={r}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn max_weight_scales_like_inverse_sqrt() {
        let kernel = BinomKernel::new(0.5, 100).unwrap();
        let v = kernel.max_weight();
        // central binomial: C(100,50)/2^100
        assert!((v - 0.079_589_237_387_178_75).abs() < 1e-13);
        assert!(v * 10.0 <= 1.0);
        for n in [100usize, 1_000, 10_000] {
            let kernel = BinomKernel::new(0.3, n).unwrap();
            assert!(kernel.max_weight() * (n as f64).sqrt() <= 1.0, "n={n}");
        }
    }

    #[test]
    fn log_weights_match_linear_where_representable() {
        let kernel = BinomKernel::new(0.3, 500).unwrap();
        for s in (0..=500).step_by(50) {
            let w = kernel.weight(s);
            if w > 1e-280 {
                assert!(
                    (kernel.log_weight(s) - w.ln()).abs() < 1e-9,
                    "s={s}: log {} vs ln {}",
                    kernel.log_weight(s),
                    w.ln()
                );
            }
        }
        // log weights stay finite even where the linear weight underflows
        let big = BinomKernel::new(0.5, 3000).unwrap();
        assert_eq!(big.weight(0), 0.0);
        assert!(big.log_weight(0).is_finite());
        assert!((big.log_weight(0) - 3000.0 * 0.5f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn residue_sum_parity_and_normalization() {
        let kernel = BinomKernel::new(0.5, 6).unwrap();
        let even = kernel.residue_class_sum(2, 0).unwrap();
        assert!((even - 0.5).abs() < 1e-15);
        // exact route in rational mode
        let rational = BinomKernel::new_rational(1, 2, 6).unwrap();
        assert_eq!(
            rational.residue_class_sum_rational(2, 0).unwrap(),
            big_rat(1, 2)
        );

        let trivial = BinomKernel::new(0.5, 1).unwrap();
        assert!((trivial.residue_class_sum(1, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn residue_sum_near_uniform_for_large_n() {
        let kernel = BinomKernel::new(0.3, 10_000).unwrap();
        let sum = kernel.residue_class_sum(7, 3).unwrap();
        assert!(
            (sum - 1.0 / 7.0).abs() <= 2.0 / 100.0,
            "sum {sum} too far from 1/7"
        );
    }

    #[test]
    fn residue_class_validation() {
        let kernel = BinomKernel::new(0.5, 4).unwrap();
        assert!(matches!(
            kernel.residue_class_sum(0, 0),
            Err(KernelError::InvalidResidueClass { .. })
        ));
        assert!(matches!(
            kernel.residue_class_sum(5, 0),
            Err(KernelError::InvalidResidueClass { .. })
        ));
        assert!(matches!(
            kernel.residue_class_sum(3, 3),
            Err(KernelError::InvalidResidueClass { .. })
        ));
    }

    #[test]
    fn gcd_kfree_sum_examples() {
        let tables = ArithTables::build(100, 1).unwrap();
        let kernel = BinomKernel::new(0.5, 2).unwrap();
        // modulus 1: gcd is always 1, which is k-free
        assert!((kernel.gcd_kfree_sum(7, 1, &tables).unwrap() - 1.0).abs() < 1e-12);
        // gcd(m, 2) over m in {0,1,2} is {2,1,2}: only m=1 passes for k=1
        assert!((kernel.gcd_kfree_sum(0, 2, &tables).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gcd_kfree_sum_tracks_fk() {
        let tables = ArithTables::build(100, 1).unwrap();
        let kernel = BinomKernel::new(0.3, 10_000).unwrap();
        let sum = kernel.gcd_kfree_sum(0, 12, &tables).unwrap();
        let fk12 = tables.fk_f64(12);
        let tau3 = tables.tau_l(12, 3) as f64;
        assert!(
            (sum - fk12).abs() <= 2.0 * tau3 / 100.0,
            "sum {sum} vs fk(12) {fk12}"
        );
    }

    #[test]
    fn double_gcd_kfree_sum_examples() {
        let tables = ArithTables::build(100, 1).unwrap();
        let kernel = BinomKernel::new(0.5, 2).unwrap();
        assert!((kernel.double_gcd_kfree_sum(0, 1, 5, 1, &tables).unwrap() - 1.0).abs() < 1e-12);
        // m in {0,1,2}, weights {1/4,1/2,1/4}; need gcd(m,2)=1 and
        // gcd(m+1,3)=1: only m=1 qualifies.
        let sum = kernel.double_gcd_kfree_sum(0, 2, 1, 3, &tables).unwrap();
        assert!((sum - 0.5).abs() < 1e-15);
        assert!(matches!(
            kernel.double_gcd_kfree_sum(0, 4, 0, 6, &tables),
            Err(KernelError::NonCoprimeModuli { .. })
        ));
    }

    #[test]
    fn double_gcd_kfree_sum_tracks_fk_product() {
        let tables = ArithTables::build(100, 2).unwrap();
        let kernel = BinomKernel::new(0.5, 10_000).unwrap();
        let sum = kernel.double_gcd_kfree_sum(0, 4, 1, 9, &tables).unwrap();
        let main = tables.fk_f64(4) * tables.fk_f64(9);
        let tau = (tables.tau_l(4, 3) * tables.tau_l(9, 3)) as f64;
        assert!((sum - main).abs() <= 2.0 * tau / 100.0);
    }

    #[test]
    fn coprime_moduli_sum_examples() {
        let kernel = BinomKernel::new(0.5, 4).unwrap();
        let all = kernel
            .coprime_moduli_sum(&[ResidueConstraint {
                shift: 0,
                modulus: 1,
                target: 1,
            }])
            .unwrap();
        assert!((all - 1.0).abs() < 1e-12);

        // gcd(s, 2) = 2 means s even: C(4,0)+C(4,2)+C(4,4) over 16 = 1/2
        let even = kernel
            .coprime_moduli_sum(&[ResidueConstraint {
                shift: 0,
                modulus: 2,
                target: 2,
            }])
            .unwrap();
        assert!((even - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coprime_moduli_main_term_and_error_scaling() {
        let constraints = [
            ResidueConstraint {
                shift: 0,
                modulus: 4,
                target: 2,
            },
            ResidueConstraint {
                shift: 1,
                modulus: 9,
                target: 3,
            },
        ];
        let main = coprime_moduli_main_term(&constraints).unwrap();
        assert!((main - (1.0 / 6.0) * 0.5 * (2.0 / 3.0)).abs() < 1e-15);

        let kernel = BinomKernel::new(0.3, 10_000).unwrap();
        let sum = kernel.coprime_moduli_sum(&constraints).unwrap();
        assert!((sum - main).abs() < 0.05, "sum {sum} vs main {main}");
    }

    #[test]
    fn constraint_validation() {
        let kernel = BinomKernel::new(0.5, 4).unwrap();
        let bad_pair = [
            ResidueConstraint {
                shift: 0,
                modulus: 4,
                target: 1,
            },
            ResidueConstraint {
                shift: 0,
                modulus: 6,
                target: 1,
            },
        ];
        assert!(matches!(
            kernel.coprime_moduli_sum(&bad_pair),
            Err(KernelError::NonCoprimeModuli { .. })
        ));
        let bad_target = [ResidueConstraint {
            shift: 0,
            modulus: 4,
            target: 3,
        }];
        assert!(matches!(
            kernel.coprime_moduli_sum(&bad_target),
            Err(KernelError::TargetNotDivisor { .. })
        ));
    }

    #[test]
    fn kernel_construction_errors() {
        assert!(matches!(
            BinomKernel::new(0.0, 3),
            Err(KernelError::InvalidAlpha { .. })
        ));
        assert!(matches!(
            BinomKernel::new(1.0, 3),
            Err(KernelError::InvalidAlpha { .. })
        ));
        assert!(matches!(
            BinomKernel::new(f64::NAN, 3),
            Err(KernelError::InvalidAlpha { .. })
        ));
        assert!(matches!(
            BinomKernel::new_rational(0, 3, 3),
            Err(KernelError::InvalidAlphaRatio { .. })
        ));
        assert!(matches!(
            BinomKernel::new_rational(3, 3, 3),
            Err(KernelError::InvalidAlphaRatio { .. })
        ));
        assert!(matches!(
            BinomKernel::new_rational(1, 2, 65),
            Err(KernelError::RationalCapExceeded { .. })
        ));
    }

    proptest! {
        #[test]
        fn weights_normalized_and_positive(alpha in 0.01f64..0.99, n in 1usize..800) {
            let kernel = BinomKernel::new(alpha, n).unwrap();
            let total: f64 = kernel.weights().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for s in 0..=n {
                let w = kernel.weight(s);
                prop_assert!(w.is_finite() && w >= 0.0);
                // positive wherever the true weight is representable at all
                if kernel.log_weight(s) > -700.0 {
                    prop_assert!(w > 0.0, "s={} underflowed, log={}", s, kernel.log_weight(s));
                }
            }
        }

        #[test]
        fn residue_classes_partition_unity(
            alpha in 0.05f64..0.95,
            n in 2usize..600,
            d in 1usize..50,
        ) {
            prop_assume!(d <= n);
            let kernel = BinomKernel::new(alpha, n).unwrap();
            let mut total = 0.0;
            for r in 0..d {
                total += kernel.residue_class_sum(d, r).unwrap();
            }
            prop_assert!((total - 1.0).abs() < 1e-10);
        }

        #[test]
        fn kernel_symmetry_under_alpha_flip(alpha in 0.05f64..0.95, n in 1usize..300) {
            let kernel = BinomKernel::new(alpha, n).unwrap();
            let flipped = BinomKernel::new(1.0 - alpha, n).unwrap();
            for s in 0..=n {
                let a = kernel.weight(s);
                let b = flipped.weight(n - s);
                prop_assert!((a - b).abs() <= 1e-12 * a.max(b).max(1e-300),
                    "s={}, {} vs {}", s, a, b);
            }
        }

        #[test]
        fn kernel_symmetry_exact_in_rational_mode(num in 1u64..8, den in 2u64..9, n in 1usize..30) {
            prop_assume!(num < den);
            let kernel = BinomKernel::new_rational(num, den, n).unwrap();
            let flipped = BinomKernel::new_rational(den - num, den, n).unwrap();
            let w = kernel.rational_weights().unwrap();
            let v = flipped.rational_weights().unwrap();
            for s in 0..=n {
                prop_assert_eq!(&w[s], &v[n - s]);
            }
        }
    }
}
