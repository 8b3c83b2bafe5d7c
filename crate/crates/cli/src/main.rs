//! `kfw` — command-line driver for k-free random walk statistics.
//!
//! Subcommands:
//! * `simulate`  — Monte Carlo walks with deterministic parallel seeding
//! * `exact`     — exact expectations/variances over a grid of walk lengths
//! * `constants` — certified limit constants as JSON
//! * `verify`    — numeric checks of the kernel-sum lemmas, CSV + exit code
//! * `report`    — combined convergence table (Monte Carlo vs exact vs limit)
//!
//! Exit codes: 0 success, 1 usage or runtime error, 2 verification
//! threshold breach.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kfw_cli::commands::{constants, exact, report, simulate, verify};
use kfw_cli::settings;

#[derive(Parser)]
#[command(
    name = "kfw",
    version,
    about = "k-free lattice points along random walks: simulation, exact expectations, limit constants"
)]
struct Cli {
    /// key=value file supplying defaults for any long flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate random walks and estimate the k-free and twin proportions
    Simulate(simulate::SimulateArgs),
    /// Exact expectations and variances over a grid of walk lengths
    Exact(exact::ExactArgs),
    /// Limit constants with certified truncation error, as JSON
    Constants(constants::ConstantsArgs),
    /// Drive the kernel-sum lemma checks over parameter grids
    Verify(verify::VerifyArgs),
    /// Combined convergence table: Monte Carlo, exact, and limit values
    Report(report::ReportArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let settings = settings::Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(args) => simulate::run(args, &settings),
        Command::Exact(args) => exact::run(args, &settings),
        Command::Constants(args) => constants::run(args, &settings),
        Command::Verify(args) => verify::run(args, &settings),
        Command::Report(args) => report::run(args, &settings),
    }
}
