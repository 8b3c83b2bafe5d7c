//! Convergence-rate invariants: variance decay of the mean k-free
//! proportion, residual decay of its expectation, and the empirical
//! constants of the residue-class and gcd-constrained kernel sums.

use kfw_core::arith::ArithTables;
use kfw_core::binom::BinomKernel;
use kfw_core::constants::inv_zeta_2k;
use kfw_core::exact::{expected_kfree_proportion, kfree_proportion_variance};

#[test]
fn variance_decays_along_the_grid() {
    let tables = ArithTables::build(1025, 1).unwrap();
    let mut values = Vec::new();
    for n in [64usize, 256, 1024] {
        let v = kfree_proportion_variance(n, 0.3, &tables).unwrap();
        println!("V(mean proportion) at n={n}: {v:.6e}");
        values.push(v);
    }
    assert!(values[2] < values[0], "variance did not decay: {values:?}");
}

#[test]
fn expectation_residuals_decay() {
    let tables = ArithTables::build(4001, 1).unwrap();
    let target = inv_zeta_2k(1, 1e-7).unwrap().value;
    let mut residuals = Vec::new();
    for n in [250usize, 1000, 4000] {
        let v = expected_kfree_proportion(n, 0.3, &tables).unwrap();
        residuals.push((v - target).abs());
    }
    println!("residuals: {residuals:?}");
    assert!(residuals[0] > residuals[1] && residuals[1] > residuals[2]);
}

/// The worst |residue sum − 1/d|·√n over a grid stays bounded and does
/// not grow with n (reported, not asserted a priori beyond a factor 2).
#[test]
fn residue_class_scaled_residuals_stay_bounded() {
    let mut maxima = Vec::new();
    for n in [100usize, 1000, 10_000] {
        let mut max_scaled = 0.0f64;
        for alpha in [0.3, 0.5, 0.7] {
            let kernel = BinomKernel::new(alpha, n).unwrap();
            for d in 1..=50.min(n) {
                for r in 0..d {
                    let sum = kernel.residue_class_sum(d, r).unwrap();
                    let scaled = (sum - 1.0 / d as f64).abs() * (n as f64).sqrt();
                    assert!(scaled.is_finite());
                    max_scaled = max_scaled.max(scaled);
                }
            }
        }
        println!("max scaled residue residual at n={n}: {max_scaled:.4}");
        maxima.push(max_scaled);
    }
    assert!(maxima[2] <= 2.0 * maxima[0]);
}

/// Single-gcd constrained sums over a small modulus range: the observed
/// constant |sum − fk(b)|·√n/τ₃(b) is reported and stays small.
#[test]
fn gcd_kfree_scaled_residuals_stay_bounded() {
    for k in [1u32, 2] {
        let tables = ArithTables::build(200, k).unwrap();
        for n in [1000usize, 10_000] {
            let kernel = BinomKernel::new(0.5, n).unwrap();
            let mut worst = 0.0f64;
            for b in 1..=50u64 {
                let sum = kernel.gcd_kfree_sum(0, b, &tables).unwrap();
                let main = tables.fk_f64(b as usize);
                let scaled =
                    (sum - main).abs() * (n as f64).sqrt() / tables.tau_l(b as usize, 3) as f64;
                worst = worst.max(scaled);
            }
            println!("k={k}, n={n}: worst scaled gcd-kfree residual {worst:.4}");
            assert!(worst <= 10.0);
        }
    }
}
