use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use kfw_core::constants::{inv_zeta_2k, twin_product};
use kfw_core::montecarlo::{run_trials, Aggregate, TrialResult, WalkConfig};

use super::OutFormat;
use crate::output::{self, fmt_f64, RunManifest, SCHEMA_VERSION};
use crate::settings::{resolve, resolve_threads, Settings};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// right-step probability, in (0,1)
    #[arg(long)]
    alpha: Option<f64>,

    /// k-free order (1 = visible points)
    #[arg(long)]
    k: Option<u32>,

    /// number of walk points entering the k-free proportion
    #[arg(long)]
    n: Option<usize>,

    #[arg(long)]
    trials: Option<u64>,

    #[arg(long)]
    seed: Option<u64>,

    /// worker threads (default: KFW_THREADS or automatic)
    #[arg(long)]
    threads: Option<usize>,

    /// output format
    #[arg(long, value_enum)]
    out: Option<OutFormat>,

    #[arg(long, value_name = "PATH")]
    out_file: Option<PathBuf>,

    /// also dump per-trial results
    #[arg(long)]
    per_trial: bool,

    /// certified tolerance for the target_s/target_t reference columns
    #[arg(long)]
    target_tol: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SimulateOutput {
    pub schema_version: u32,
    pub aggregate: Aggregate,
    pub target_s: f64,
    pub target_t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<Vec<TrialResult>>,
}

pub fn run(args: SimulateArgs, settings: &Settings) -> Result<u8> {
    let alpha = resolve(args.alpha, settings, "alpha", 0.5)?;
    let k = resolve(args.k, settings, "k", 1)?;
    let steps = resolve(args.n, settings, "n", 100_000)?;
    let trials = resolve(args.trials, settings, "trials", 200)?;
    let seed = resolve(args.seed, settings, "seed", 42)?;
    let threads = resolve_threads(args.threads, settings)?;
    let format = resolve(args.out, settings, "out", OutFormat::Csv)?;
    let target_tol = resolve(args.target_tol, settings, "target-tol", 1e-6)?;

    let config = WalkConfig {
        alpha,
        k,
        steps,
        trials,
        base_seed: seed,
        threads,
    };
    let (trial_results, aggregate) = run_trials(&config)?;
    let target_s = inv_zeta_2k(k, target_tol)?.value;
    let target_t = twin_product(k, target_tol)?.value;

    let mut manifest = RunManifest::new("simulate", parameter_echo(&config, format, target_tol));
    manifest.base_seed = Some(seed);

    match format {
        OutFormat::Json => {
            let payload = SimulateOutput {
                schema_version: SCHEMA_VERSION,
                aggregate,
                target_s,
                target_t,
                trials: args.per_trial.then_some(trial_results),
            };
            let json = serde_json::to_string_pretty(&payload)? + "\n";
            output::emit(args.out_file.as_deref(), &json)?;
            if let Some(path) = &args.out_file {
                manifest.output_paths.push(path.display().to_string());
                output::write_manifest(path, &manifest)?;
            }
        }
        OutFormat::Csv => {
            let table = aggregate_csv(&aggregate, target_s, target_t);
            output::emit(args.out_file.as_deref(), &table)?;
            let trials_path = match (&args.out_file, args.per_trial) {
                (Some(path), true) => {
                    let trials_path = path.with_extension("trials.csv");
                    output::emit(Some(&trials_path), &trials_csv(&trial_results))?;
                    Some(trials_path)
                }
                (None, true) => {
                    bail!("--per-trial with csv output requires --out-file");
                }
                _ => None,
            };
            if let Some(path) = &args.out_file {
                manifest.output_paths.push(path.display().to_string());
                if let Some(tp) = &trials_path {
                    manifest.output_paths.push(tp.display().to_string());
                }
                output::write_manifest(path, &manifest)?;
            }
        }
    }
    Ok(0)
}

fn parameter_echo(
    config: &WalkConfig,
    format: OutFormat,
    target_tol: f64,
) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    map.insert("alpha".into(), fmt_f64(config.alpha));
    map.insert("k".into(), config.k.to_string());
    map.insert("n".into(), config.steps.to_string());
    map.insert("trials".into(), config.trials.to_string());
    map.insert("seed".into(), config.base_seed.to_string());
    map.insert(
        "threads".into(),
        config
            .threads
            .map_or_else(|| "auto".into(), |t| t.to_string()),
    );
    map.insert("out".into(), format!("{format:?}").to_lowercase());
    map.insert("target-tol".into(), fmt_f64(target_tol));
    map
}

fn aggregate_csv(aggregate: &Aggregate, target_s: f64, target_t: f64) -> String {
    let config = &aggregate.config;
    let row = vec![
        fmt_f64(config.alpha),
        config.k.to_string(),
        config.steps.to_string(),
        aggregate.trials.to_string(),
        config.base_seed.to_string(),
        fmt_f64(aggregate.mean_s),
        fmt_f64(aggregate.stderr_s),
        fmt_f64(aggregate.mean_t),
        fmt_f64(aggregate.stderr_t),
        fmt_f64(target_s),
        fmt_f64(target_t),
    ];
    output::csv_table(
        &[
            "alpha", "k", "n", "trials", "seed", "mean_s", "stderr_s", "mean_t", "stderr_t",
            "target_s", "target_t",
        ],
        &[row],
    )
}

fn trials_csv(trials: &[TrialResult]) -> String {
    let rows: Vec<Vec<String>> = trials
        .iter()
        .map(|t| {
            vec![
                t.trial_index.to_string(),
                fmt_f64(t.s_bar),
                fmt_f64(t.t_bar),
                t.final_point.0.to_string(),
                t.final_point.1.to_string(),
            ]
        })
        .collect();
    output::csv_table(
        &["trial_index", "s_bar", "t_bar", "final_x", "final_y"],
        &rows,
    )
}
