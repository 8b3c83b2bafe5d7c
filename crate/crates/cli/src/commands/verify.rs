use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use rayon::prelude::*;

use kfw_core::arith::{tau_l, ArithTables};
use kfw_core::binom::{coprime_moduli_main_term, BinomKernel, ResidueConstraint};
use kfw_core::constants::{inv_zeta_2k, twin_product};
use kfw_core::util::gcd;

use crate::output::{self, fmt_f64, fmt_opt_f64, RunManifest};
use crate::settings::{resolve, resolve_list, resolve_threads, with_thread_pool, Settings};

/// Which kernel-sum statement to check numerically. Names follow the
/// internal numbering used throughout this crate's docs: 2.2 max weight,
/// 2.5 residue classes, 2.6 coprime moduli, 3.1 single gcd, 4.1 double gcd,
/// 2.9/2.10 partial-sum asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LemmaArg {
    #[value(name = "L2_2")]
    L22,
    #[value(name = "L2_5")]
    L25,
    #[value(name = "L2_6")]
    L26,
    #[value(name = "L3_1")]
    L31,
    #[value(name = "L4_1")]
    L41,
    #[value(name = "L2_9")]
    L29,
    #[value(name = "L2_10")]
    L210,
}

impl LemmaArg {
    fn label(self) -> &'static str {
        match self {
            LemmaArg::L22 => "L2_2",
            LemmaArg::L25 => "L2_5",
            LemmaArg::L26 => "L2_6",
            LemmaArg::L31 => "L3_1",
            LemmaArg::L41 => "L4_1",
            LemmaArg::L29 => "L2_9",
            LemmaArg::L210 => "L2_10",
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    lemma: LemmaArg,

    /// step-probability grid, comma separated
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,

    /// kernel length grid, comma separated
    #[arg(long, value_delimiter = ',')]
    ns: Vec<usize>,

    /// k grid for the gcd-constrained lemmas
    #[arg(long, value_delimiter = ',')]
    k_list: Vec<u32>,

    /// largest residue modulus for L2_5
    #[arg(long)]
    d_max: Option<usize>,

    /// largest gcd modulus for L3_1/L4_1
    #[arg(long)]
    b_max: Option<u64>,

    /// partial-sum length for L2_9/L2_10
    #[arg(long)]
    sum_limit: Option<usize>,

    /// largest allowed scaled residual (exit code 2 beyond it)
    #[arg(long)]
    threshold: Option<f64>,

    #[arg(long)]
    threads: Option<usize>,

    #[arg(long, value_name = "PATH")]
    out_file: Option<PathBuf>,
}

struct Row {
    lemma: &'static str,
    alpha: Option<f64>,
    k: Option<u32>,
    n: usize,
    params: [Option<u64>; 4],
    lhs: f64,
    main_term: f64,
    scaled_residual: f64,
}

impl Row {
    fn residual(&self) -> f64 {
        self.lhs - self.main_term
    }
}

pub fn run(args: VerifyArgs, settings: &Settings) -> Result<u8> {
    let lemma = args.lemma;
    let alphas = resolve_list(args.alphas, settings, "alphas", &[0.5])?;
    let ns = resolve_list(args.ns, settings, "ns", &[1000, 10_000])?;
    let k_list = resolve_list(args.k_list, settings, "k-list", &[1, 2])?;
    let d_max = resolve(args.d_max, settings, "d-max", 50)?;
    let b_max = resolve(args.b_max, settings, "b-max", 200)?;
    let sum_limit = resolve(args.sum_limit, settings, "sum-limit", 1_000_000)?;
    let threshold = resolve(args.threshold, settings, "threshold", 10.0)?;
    let threads = resolve_threads(args.threads, settings)?;

    let rows = with_thread_pool(threads, || match lemma {
        LemmaArg::L22 => max_weight_rows(&alphas, &ns),
        LemmaArg::L25 => residue_class_rows(&alphas, &ns, d_max),
        LemmaArg::L26 => coprime_moduli_rows(&alphas, &ns),
        LemmaArg::L31 => gcd_kfree_rows(&alphas, &ns, &k_list, b_max),
        LemmaArg::L41 => double_gcd_rows(&alphas, &ns, &k_list, b_max),
        LemmaArg::L29 | LemmaArg::L210 => partial_sum_rows(lemma, &k_list, sum_limit),
    })?;

    let table = rows_to_csv(&rows);
    output::emit(args.out_file.as_deref(), &table)?;

    if let Some(path) = &args.out_file {
        let mut parameters = BTreeMap::new();
        parameters.insert("lemma".into(), lemma.label().to_string());
        parameters.insert("alphas".into(), join(&alphas));
        parameters.insert("ns".into(), join(&ns));
        parameters.insert("k-list".into(), join(&k_list));
        parameters.insert("d-max".into(), d_max.to_string());
        parameters.insert("b-max".into(), b_max.to_string());
        parameters.insert("sum-limit".into(), sum_limit.to_string());
        parameters.insert("threshold".into(), fmt_f64(threshold));
        let mut manifest = RunManifest::new("verify", parameters);
        manifest.output_paths.push(path.display().to_string());
        output::write_manifest(path, &manifest)?;
    }

    let offenders: Vec<&Row> = rows
        .iter()
        .filter(|r| r.scaled_residual > threshold || r.scaled_residual.is_nan())
        .collect();
    if offenders.is_empty() {
        Ok(0)
    } else {
        eprintln!(
            "{}: {} of {} grid points exceed threshold {threshold}",
            lemma.label(),
            offenders.len(),
            rows.len()
        );
        for row in offenders.iter().take(20) {
            eprintln!(
                "  alpha={:?} k={:?} n={} params={:?}: scaled residual {}",
                row.alpha, row.k, row.n, row.params, row.scaled_residual
            );
        }
        Ok(2)
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn rows_to_csv(rows: &[Row]) -> String {
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.lemma.to_string(),
                fmt_opt_f64(r.alpha),
                r.k.map(|k| k.to_string()).unwrap_or_default(),
                r.n.to_string(),
                r.params[0].map(|p| p.to_string()).unwrap_or_default(),
                r.params[1].map(|p| p.to_string()).unwrap_or_default(),
                r.params[2].map(|p| p.to_string()).unwrap_or_default(),
                r.params[3].map(|p| p.to_string()).unwrap_or_default(),
                fmt_f64(r.lhs),
                fmt_f64(r.main_term),
                fmt_f64(r.residual()),
                fmt_f64(r.scaled_residual),
            ]
        })
        .collect();
    output::csv_table(
        &[
            "lemma",
            "alpha",
            "k",
            "n",
            "param1",
            "param2",
            "param3",
            "param4",
            "lhs",
            "main_term",
            "residual",
            "scaled_residual",
        ],
        &csv_rows,
    )
}

/// max_s C_α(n, s) with √n scaling; the main term is zero.
fn max_weight_rows(alphas: &[f64], ns: &[usize]) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &n in ns {
            let kernel = BinomKernel::new(alpha, n)?;
            let lhs = kernel.max_weight();
            rows.push(Row {
                lemma: "L2_2",
                alpha: Some(alpha),
                k: None,
                n,
                params: [None; 4],
                lhs,
                main_term: 0.0,
                scaled_residual: lhs * (n as f64).sqrt(),
            });
        }
    }
    Ok(rows)
}

/// Residue-class sums against 1/d, scaled by √n.
fn residue_class_rows(alphas: &[f64], ns: &[usize], d_max: usize) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &n in ns {
            let kernel = BinomKernel::new(alpha, n)?;
            let sqrt_n = (n as f64).sqrt();
            for d in 1..=d_max.min(n) {
                for r in 0..d {
                    let lhs = kernel.residue_class_sum(d, r)?;
                    let main_term = 1.0 / d as f64;
                    rows.push(Row {
                        lemma: "L2_5",
                        alpha: Some(alpha),
                        k: None,
                        n,
                        params: [Some(d as u64), Some(r as u64), None, None],
                        lhs,
                        main_term,
                        scaled_residual: (lhs - main_term).abs() * sqrt_n,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Two-constraint coprime-moduli sums with shifts a₁ = 0, a₂ = 1, over a
/// fixed catalog of (modulus, target) pairs on coprime prime powers;
/// scaled by √n over the τ₂ factors of the lemma's error term.
fn coprime_moduli_rows(alphas: &[f64], ns: &[usize]) -> Result<Vec<Row>> {
    let first: Vec<(u64, u64)> = catalog(&[2, 4, 8, 16, 5, 25]);
    let second: Vec<(u64, u64)> = catalog(&[3, 9, 27, 7, 49]);
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &n in ns {
            let kernel = BinomKernel::new(alpha, n)?;
            let sqrt_n = (n as f64).sqrt();
            for &(u1, d1) in &first {
                for &(u2, d2) in &second {
                    let constraints = [
                        ResidueConstraint {
                            shift: 0,
                            modulus: u1,
                            target: d1,
                        },
                        ResidueConstraint {
                            shift: 1,
                            modulus: u2,
                            target: d2,
                        },
                    ];
                    let lhs = kernel.coprime_moduli_sum(&constraints)?;
                    let main_term = coprime_moduli_main_term(&constraints)?;
                    let tau_factor = (tau_l(u1 / d1, 2) * tau_l(u2 / d2, 2)) as f64;
                    rows.push(Row {
                        lemma: "L2_6",
                        alpha: Some(alpha),
                        k: None,
                        n,
                        params: [Some(u1), Some(d1), Some(u2), Some(d2)],
                        lhs,
                        main_term,
                        scaled_residual: (lhs - main_term).abs() * sqrt_n / tau_factor,
                    });
                }
            }
        }
    }
    Ok(rows)
}

fn catalog(moduli: &[u64]) -> Vec<(u64, u64)> {
    let mut pairs = Vec::new();
    for &u in moduli {
        for d in 1..=u {
            if u % d == 0 {
                pairs.push((u, d));
            }
        }
    }
    pairs
}

/// Single gcd-k-free sums against fk(b), scaled by √n/τ₃(b); shift a = 0.
fn gcd_kfree_rows(alphas: &[f64], ns: &[usize], k_list: &[u32], b_max: u64) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &k in k_list {
        let tables = ArithTables::build(b_max as usize, k)?;
        for &alpha in alphas {
            for &n in ns {
                let kernel = BinomKernel::new(alpha, n)?;
                let sqrt_n = (n as f64).sqrt();
                let mut batch = (1..=b_max)
                    .into_par_iter()
                    .map(|b| {
                        let lhs = kernel.gcd_kfree_sum(0, b, &tables)?;
                        let main_term = tables.fk_f64(b as usize);
                        let tau3 = tables.tau_l(b as usize, 3) as f64;
                        Ok(Row {
                            lemma: "L3_1",
                            alpha: Some(alpha),
                            k: Some(k),
                            n,
                            params: [Some(0), Some(b), None, None],
                            lhs,
                            main_term,
                            scaled_residual: (lhs - main_term).abs() * sqrt_n / tau3,
                        })
                    })
                    .collect::<Result<Vec<Row>>>()?;
                rows.append(&mut batch);
            }
        }
    }
    Ok(rows)
}

/// Double gcd-k-free sums over all coprime pairs b₁ < b₂ ≤ b_max, shifts
/// a₁ = 0 and a₂ = 1, against fk(b₁)fk(b₂), scaled by √n/(τ₃ τ₃).
fn double_gcd_rows(alphas: &[f64], ns: &[usize], k_list: &[u32], b_max: u64) -> Result<Vec<Row>> {
    let pairs: Vec<(u64, u64)> = (1..=b_max)
        .flat_map(|b1| (b1 + 1..=b_max).map(move |b2| (b1, b2)))
        .filter(|&(b1, b2)| gcd(b1, b2) == 1)
        .collect();
    let mut rows = Vec::new();
    for &k in k_list {
        let tables = ArithTables::build(b_max as usize, k)?;
        for &alpha in alphas {
            for &n in ns {
                let kernel = BinomKernel::new(alpha, n)?;
                let sqrt_n = (n as f64).sqrt();
                let mut batch = pairs
                    .par_iter()
                    .map(|&(b1, b2)| {
                        let lhs = kernel.double_gcd_kfree_sum(0, b1, 1, b2, &tables)?;
                        let main_term = tables.fk_f64(b1 as usize) * tables.fk_f64(b2 as usize);
                        let tau =
                            (tables.tau_l(b1 as usize, 3) * tables.tau_l(b2 as usize, 3)) as f64;
                        Ok(Row {
                            lemma: "L4_1",
                            alpha: Some(alpha),
                            k: Some(k),
                            n,
                            params: [Some(b1), Some(b2), None, None],
                            lhs,
                            main_term,
                            scaled_residual: (lhs - main_term).abs() * sqrt_n / tau,
                        })
                    })
                    .collect::<Result<Vec<Row>>>()?;
                rows.append(&mut batch);
            }
        }
    }
    Ok(rows)
}

/// Partial-sum asymptotics: Σ fk(n) against N/ζ(2k) and Σ fk(n)fk(n+1)
/// against N·twin. The scaled residual is |Σ − N·C|, the quantity the
/// asymptotics bound by O(N^ε).
fn partial_sum_rows(lemma: LemmaArg, k_list: &[u32], sum_limit: usize) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &k in k_list {
        let tables = ArithTables::build(sum_limit + 1, k)?;
        let (label, total, constant) = match lemma {
            LemmaArg::L29 => (
                "L2_9",
                tables.partial_sum_fk_f64(sum_limit)?,
                inv_zeta_2k(k, 1e-8)?.value,
            ),
            _ => (
                "L2_10",
                tables.partial_sum_fk_pair_f64(sum_limit)?,
                twin_product(k, 1e-8)?.value,
            ),
        };
        let nf = sum_limit as f64;
        rows.push(Row {
            lemma: label,
            alpha: None,
            k: Some(k),
            n: sum_limit,
            params: [None; 4],
            lhs: total / nf,
            main_term: constant,
            scaled_residual: (total - nf * constant).abs(),
        });
    }
    Ok(rows)
}
