//! Output plumbing: CSV assembly, float formatting, result-file writing and
//! the run manifest that accompanies every output file.
//!
//! Floats are printed with 17 significant digits, which round-trips every
//! f64 exactly, so reruns with identical parameters produce byte-identical
//! files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits: 1 before the point, 16 after.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn csv_line(fields: &[String]) -> String {
    let escaped: Vec<String> = fields.iter().map(|f| csv_escape(f)).collect();
    escaped.join(",")
}

/// RFC-4180-style table with a mandatory header row and LF line endings.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&csv_line(row));
        out.push('\n');
    }
    out
}

/// Writes to the file when given, else to stdout.
pub fn emit(out_file: Option<&Path>, content: &str) -> Result<()> {
    match out_file {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)
                        .with_context(|| format!("creating {}", parent.display()))?;
                }
            }
            std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Full parameter echo for one run. Output files themselves carry no
/// timestamp, so reruns stay byte-identical; the manifest records when and
/// with what the files were produced.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub artifact_version: String,
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub base_seed: Option<u64>,
    pub timestamp_unix: u64,
    pub output_paths: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, parameters: BTreeMap<String, String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            parameters,
            base_seed: None,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            output_paths: Vec::new(),
        }
    }
}

pub fn manifest_path(out_file: &Path) -> PathBuf {
    let mut name = out_file.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out_file.with_file_name(name)
}

/// Writes `<out_file>.manifest.json` next to the output file.
pub fn write_manifest(out_file: &Path, manifest: &RunManifest) -> Result<()> {
    let path = manifest_path(out_file);
    let json = serde_json::to_string_pretty(manifest)?;
    std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for x in [
            0.5,
            1.0 / 3.0,
            0.607_927_101_854_026_7,
            f64::MIN_POSITIVE,
            123_456_789.123_456_79,
        ] {
            let printed = fmt_f64(x);
            assert_eq!(printed.parse::<f64>().unwrap(), x, "{printed}");
        }
    }

    #[test]
    fn csv_escaping() {
        assert_eq!(csv_line(&["a".into(), "b,c".into()]), "a,\"b,c\"");
        assert_eq!(csv_line(&["say \"hi\"".into()]), "\"say \"\"hi\"\"\"");
    }
}
