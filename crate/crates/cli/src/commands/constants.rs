use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use kfw_core::constants::{inv_zeta_2k, twin_product, ConstantResult};

use crate::output::{self, fmt_f64, RunManifest, SCHEMA_VERSION};
use crate::settings::{resolve, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    InvZeta,
    Twin,
    Both,
}

impl std::str::FromStr for KindArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "inv-zeta" | "invzeta" => Ok(KindArg::InvZeta),
            "twin" => Ok(KindArg::Twin),
            "both" => Ok(KindArg::Both),
            other => Err(format!("unknown constant kind {other:?}")),
        }
    }
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    /// which constant(s) to evaluate
    #[arg(long, value_enum)]
    kind: Option<KindArg>,

    #[arg(long)]
    k: Option<u32>,

    /// certified absolute tolerance
    #[arg(long)]
    tol: Option<f64>,

    #[arg(long, value_name = "PATH")]
    out_file: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ConstantsOutput {
    pub schema_version: u32,
    pub constants: Vec<ConstantResult>,
}

pub fn run(args: ConstantsArgs, settings: &Settings) -> Result<u8> {
    let kind = resolve(args.kind, settings, "kind", KindArg::Both)?;
    let k = resolve(args.k, settings, "k", 1)?;
    let tol = resolve(args.tol, settings, "tol", 1e-9)?;

    let mut constants = Vec::new();
    if matches!(kind, KindArg::InvZeta | KindArg::Both) {
        constants.push(inv_zeta_2k(k, tol)?);
    }
    if matches!(kind, KindArg::Twin | KindArg::Both) {
        constants.push(twin_product(k, tol)?);
    }

    let payload = ConstantsOutput {
        schema_version: SCHEMA_VERSION,
        constants,
    };
    let json = serde_json::to_string_pretty(&payload)? + "\n";
    output::emit(args.out_file.as_deref(), &json)?;

    if let Some(path) = &args.out_file {
        let mut parameters = BTreeMap::new();
        parameters.insert("kind".into(), format!("{kind:?}").to_lowercase());
        parameters.insert("k".into(), k.to_string());
        parameters.insert("tol".into(), fmt_f64(tol));
        let mut manifest = RunManifest::new("constants", parameters);
        manifest.output_paths.push(path.display().to_string());
        output::write_manifest(path, &manifest)?;
    }
    Ok(0)
}
