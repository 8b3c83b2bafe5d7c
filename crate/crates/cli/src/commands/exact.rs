use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use kfw_core::arith::ArithTables;
use kfw_core::constants::{inv_zeta_2k, twin_product};
use kfw_core::exact::{expectation_series, Quantity};

use super::OutFormat;
use crate::output::{self, fmt_f64, RunManifest, SCHEMA_VERSION};
use crate::settings::{resolve, resolve_threads, with_thread_pool, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    MeanS,
    MeanT,
    VarS,
    VarT,
}

impl std::str::FromStr for QuantityArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mean-s" => Ok(QuantityArg::MeanS),
            "mean-t" => Ok(QuantityArg::MeanT),
            "var-s" => Ok(QuantityArg::VarS),
            "var-t" => Ok(QuantityArg::VarT),
            other => Err(format!("unknown quantity {other:?}")),
        }
    }
}

impl From<QuantityArg> for Quantity {
    fn from(q: QuantityArg) -> Self {
        match q {
            QuantityArg::MeanS => Quantity::MeanS,
            QuantityArg::MeanT => Quantity::MeanT,
            QuantityArg::VarS => Quantity::VarS,
            QuantityArg::VarT => Quantity::VarT,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    quantity: Option<QuantityArg>,

    #[arg(long)]
    alpha: Option<f64>,

    #[arg(long)]
    k: Option<u32>,

    /// ascending walk lengths, comma separated
    #[arg(long, value_delimiter = ',')]
    n_grid: Vec<usize>,

    /// largest n the quadratic-cost exact engine will accept
    #[arg(long)]
    exact_cap: Option<usize>,

    /// certified tolerance for the limit-constant column
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
pub struct ExactOutput {
    pub schema_version: u32,
    pub quantity: Quantity,
    pub alpha: f64,
    pub k: u32,
    pub limit_constant: f64,
    pub rows: Vec<ExactRow>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ExactRow {
    pub n: usize,
    pub value: f64,
    pub residual: f64,
    pub residual_times_sqrt_n: f64,
}

pub fn run(args: ExactArgs, settings: &Settings) -> Result<u8> {
    let quantity = resolve(args.quantity, settings, "quantity", QuantityArg::MeanS)?;
    let alpha = resolve(args.alpha, settings, "alpha", 0.5)?;
    let k = resolve(args.k, settings, "k", 1)?;
    let grid = crate::settings::resolve_list(args.n_grid, settings, "n-grid", &[250, 1000, 4000])?;
    let exact_cap = resolve(args.exact_cap, settings, "exact-cap", 10_000)?;
    let target_tol = resolve(args.target_tol, settings, "target-tol", 1e-8)?;
    let threads = resolve_threads(args.threads, settings)?;
    let format = resolve(args.out, settings, "out", OutFormat::Csv)?;

    let max_n = grid.iter().copied().max().unwrap_or(0);
    if max_n > exact_cap {
        bail!("n={max_n} exceeds the exact-engine cap {exact_cap}; raise --exact-cap explicitly");
    }

    let limit_constant = match quantity {
        QuantityArg::MeanS => inv_zeta_2k(k, target_tol)?.value,
        QuantityArg::MeanT => twin_product(k, target_tol)?.value,
        QuantityArg::VarS | QuantityArg::VarT => 0.0,
    };

    let series = with_thread_pool(threads, || {
        let tables = ArithTables::build(max_n + 1, k)?;
        Ok(expectation_series(
            quantity.into(),
            alpha,
            &tables,
            &grid,
            limit_constant,
        )?)
    })?;

    let rows: Vec<ExactRow> = series
        .grid
        .iter()
        .zip(series.values.iter().zip(&series.residuals))
        .map(|(&n, (&value, &residual))| ExactRow {
            n,
            value,
            residual,
            residual_times_sqrt_n: residual * (n as f64).sqrt(),
        })
        .collect();

    let payload = ExactOutput {
        schema_version: SCHEMA_VERSION,
        quantity: series.quantity,
        alpha,
        k,
        limit_constant,
        rows,
    };

    let content = match format {
        OutFormat::Json => serde_json::to_string_pretty(&payload)? + "\n",
        OutFormat::Csv => {
            let quantity_name = quantity_label(quantity);
            let rows: Vec<Vec<String>> = payload
                .rows
                .iter()
                .map(|r| {
                    vec![
                        quantity_name.to_string(),
                        fmt_f64(alpha),
                        k.to_string(),
                        r.n.to_string(),
                        fmt_f64(r.value),
                        fmt_f64(limit_constant),
                        fmt_f64(r.residual),
                        fmt_f64(r.residual_times_sqrt_n),
                    ]
                })
                .collect();
            output::csv_table(
                &[
                    "quantity",
                    "alpha",
                    "k",
                    "n",
                    "value",
                    "limit_constant",
                    "residual",
                    "residual_times_sqrt_n",
                ],
                &rows,
            )
        }
    };
    output::emit(args.out_file.as_deref(), &content)?;

    if let Some(path) = &args.out_file {
        let mut parameters = BTreeMap::new();
        parameters.insert("quantity".into(), quantity_label(quantity).to_string());
        parameters.insert("alpha".into(), fmt_f64(alpha));
        parameters.insert("k".into(), k.to_string());
        parameters.insert(
            "n-grid".into(),
            grid.iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        parameters.insert("exact-cap".into(), exact_cap.to_string());
        parameters.insert("target-tol".into(), fmt_f64(target_tol));
        parameters.insert("out".into(), format!("{format:?}").to_lowercase());
        let mut manifest = RunManifest::new("exact", parameters);
        manifest.output_paths.push(path.display().to_string());
        output::write_manifest(path, &manifest)?;
    }
    Ok(0)
}

fn quantity_label(q: QuantityArg) -> &'static str {
    match q {
        QuantityArg::MeanS => "mean_s",
        QuantityArg::MeanT => "mean_t",
        QuantityArg::VarS => "var_s",
        QuantityArg::VarT => "var_t",
    }
}
