use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use kfw_core::arith::ArithTables;
use kfw_core::constants::{inv_zeta_2k, twin_product};
use kfw_core::exact::{expected_kfree_proportion, expected_twin_proportion};
use kfw_core::montecarlo::{run_trials, WalkConfig};

use super::OutFormat;
use crate::output::{self, fmt_f64, fmt_opt_f64, RunManifest, SCHEMA_VERSION};
use crate::settings::{resolve, resolve_list, resolve_threads, Settings};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// step probabilities, comma separated
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,

    /// k values, comma separated
    #[arg(long, value_delimiter = ',')]
    k_list: Vec<u32>,

    /// ascending walk lengths, comma separated
    #[arg(long, value_delimiter = ',')]
    n_grid: Vec<usize>,

    #[arg(long)]
    trials: Option<u64>,

    #[arg(long)]
    seed: Option<u64>,

    /// largest n for the exact-expectation columns
    #[arg(long)]
    exact_cap: Option<usize>,

    /// certified tolerance for the limit-constant columns
    #[arg(long)]
    target_tol: Option<f64>,

    #[arg(long)]
    threads: Option<usize>,

    #[arg(long, value_enum)]
    out: Option<OutFormat>,

    #[arg(long, value_name = "PATH")]
    out_file: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportOutput {
    pub schema_version: u32,
    pub rows: Vec<ReportRow>,
}

/// One convergence-table cell. Exact columns are absent above the exact
/// cap; failed cells carry the error in `status` and keep the table going.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub alpha: f64,
    pub k: u32,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub mean_s: Option<f64>,
    pub stderr_s: Option<f64>,
    pub mean_t: Option<f64>,
    pub stderr_t: Option<f64>,
    pub exact_s: Option<f64>,
    pub exact_t: Option<f64>,
    pub target_s: f64,
    pub target_t: f64,
    pub residual_s: Option<f64>,
    pub residual_t: Option<f64>,
    pub status: String,
}

pub fn run(args: ReportArgs, settings: &Settings) -> Result<u8> {
    let alphas = resolve_list(args.alphas, settings, "alphas", &[0.5])?;
    let k_list = resolve_list(args.k_list, settings, "k-list", &[1])?;
    let n_grid = resolve_list(args.n_grid, settings, "n-grid", &[1000, 10_000, 100_000])?;
    let trials = resolve(args.trials, settings, "trials", 200)?;
    let seed = resolve(args.seed, settings, "seed", 42)?;
    let exact_cap = resolve(args.exact_cap, settings, "exact-cap", 10_000)?;
    let target_tol = resolve(args.target_tol, settings, "target-tol", 1e-6)?;
    let threads = resolve_threads(args.threads, settings)?;
    let format = resolve(args.out, settings, "out", OutFormat::Csv)?;

    anyhow::ensure!(
        n_grid.windows(2).all(|w| w[0] < w[1]) && !n_grid.is_empty(),
        "n-grid must be nonempty and ascending"
    );

    let mut rows = Vec::new();
    for &k in &k_list {
        let target_s = inv_zeta_2k(k, target_tol)?.value;
        let target_t = twin_product(k, target_tol)?.value;
        let exact_limit = n_grid.iter().copied().filter(|&n| n <= exact_cap).max();
        let tables = match exact_limit {
            Some(limit) => Some(ArithTables::build(limit + 1, k)?),
            None => None,
        };
        for &alpha in &alphas {
            for &n in &n_grid {
                rows.push(report_cell(
                    alpha,
                    k,
                    n,
                    trials,
                    seed,
                    threads,
                    exact_cap,
                    target_s,
                    target_t,
                    tables.as_ref(),
                ));
            }
        }
    }

    let content = match format {
        OutFormat::Json => {
            let payload = ReportOutput {
                schema_version: SCHEMA_VERSION,
                rows,
            };
            serde_json::to_string_pretty(&payload)? + "\n"
        }
        OutFormat::Csv => rows_to_csv(&rows),
    };
    output::emit(args.out_file.as_deref(), &content)?;

    if let Some(path) = &args.out_file {
        let mut parameters = BTreeMap::new();
        parameters.insert(
            "alphas".into(),
            alphas
                .iter()
                .map(|a| fmt_f64(*a))
                .collect::<Vec<_>>()
                .join(","),
        );
        parameters.insert(
            "k-list".into(),
            k_list
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        parameters.insert(
            "n-grid".into(),
            n_grid
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        parameters.insert("trials".into(), trials.to_string());
        parameters.insert("seed".into(), seed.to_string());
        parameters.insert("exact-cap".into(), exact_cap.to_string());
        parameters.insert("target-tol".into(), fmt_f64(target_tol));
        parameters.insert("out".into(), format!("{format:?}").to_lowercase());
        let mut manifest = RunManifest::new("report", parameters);
        manifest.base_seed = Some(seed);
        manifest.output_paths.push(path.display().to_string());
        output::write_manifest(path, &manifest)?;
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn report_cell(
    alpha: f64,
    k: u32,
    n: usize,
    trials: u64,
    seed: u64,
    threads: Option<usize>,
    exact_cap: usize,
    target_s: f64,
    target_t: f64,
    tables: Option<&ArithTables>,
) -> ReportRow {
    let mut row = ReportRow {
        alpha,
        k,
        n,
        trials,
        seed,
        mean_s: None,
        stderr_s: None,
        mean_t: None,
        stderr_t: None,
        exact_s: None,
        exact_t: None,
        target_s,
        target_t,
        residual_s: None,
        residual_t: None,
        status: "ok".into(),
    };

    let config = WalkConfig {
        alpha,
        k,
        steps: n,
        trials,
        base_seed: seed,
        threads,
    };
    match run_trials(&config) {
        Ok((_, aggregate)) => {
            row.mean_s = Some(aggregate.mean_s);
            row.stderr_s = Some(aggregate.stderr_s);
            row.mean_t = Some(aggregate.mean_t);
            row.stderr_t = Some(aggregate.stderr_t);
            row.residual_s = Some(aggregate.mean_s - target_s);
            row.residual_t = Some(aggregate.mean_t - target_t);
        }
        Err(err) => {
            row.status = format!("monte carlo failed: {err}");
        }
    }

    if n <= exact_cap {
        if let Some(tables) = tables {
            match expected_kfree_proportion(n, alpha, tables)
                .and_then(|s| expected_twin_proportion(n, alpha, tables).map(|t| (s, t)))
            {
                Ok((s, t)) => {
                    row.exact_s = Some(s);
                    row.exact_t = Some(t);
                }
                Err(err) if row.status == "ok" => {
                    row.status = format!("exact engine failed: {err}");
                }
                Err(_) => {}
            }
        }
    }
    row
}

fn rows_to_csv(rows: &[ReportRow]) -> String {
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.alpha),
                r.k.to_string(),
                r.n.to_string(),
                r.trials.to_string(),
                r.seed.to_string(),
                fmt_opt_f64(r.mean_s),
                fmt_opt_f64(r.stderr_s),
                fmt_opt_f64(r.mean_t),
                fmt_opt_f64(r.stderr_t),
                fmt_opt_f64(r.exact_s),
                fmt_opt_f64(r.exact_t),
                fmt_f64(r.target_s),
                fmt_f64(r.target_t),
                fmt_opt_f64(r.residual_s),
                fmt_opt_f64(r.residual_t),
                r.status.clone(),
            ]
        })
        .collect();
    output::csv_table(
        &[
            "alpha",
            "k",
            "n",
            "trials",
            "seed",
            "mean_s",
            "stderr_s",
            "mean_t",
            "stderr_t",
            "exact_s",
            "exact_t",
            "target_s",
            "target_t",
            "residual_s",
            "residual_t",
            "status",
        ],
        &csv_rows,
    )
}
