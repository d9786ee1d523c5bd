//! `lgsim`: run Leggett-Garg scans, calibrate readout, mitigate counts and
//! check classical joint distributions.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "lgsim", version, about = "Leggett-Garg inequality simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EngineArg {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Full,
    Tensor,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario over its τ grid and write scan.csv and manifest.json.
    Scan(ScanArgs),
    /// Estimate a readout confusion matrix by preparing basis states.
    Calibrate(CalibrateArgs),
    /// Undo readout error on a counts file with a confusion matrix.
    Mitigate(MitigateArgs),
    /// Check a classical three-time joint distribution against K3 ≤ 1.
    Oracle(OracleArgs),
    /// List scenarios and their parameters.
    ListScenarios,
}

#[derive(Debug, clap::Args)]
pub struct ScanArgs {
    /// TOML config, or a manifest.json from an earlier run.
    pub config: Option<PathBuf>,
    /// Start from a scenario's built-in defaults instead of a config file.
    #[arg(long, conflicts_with = "config")]
    pub scenario: Option<String>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Master seed; falls back to the config, then to LGSIM_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mitigate readout error with a calibrated confusion matrix.
    #[arg(long)]
    pub mitigate: bool,
    /// Enable the scenario's default noise.
    #[arg(long)]
    pub noise: bool,
    /// Override a scenario parameter, e.g. `--param gamma=2`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for grid points; output order never depends on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, clap::Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 1)]
    pub bits: usize,
    /// Symmetric per-bit flip probability of the simulated device.
    #[arg(long, conflicts_with = "matrix")]
    pub flip_prob: Option<f64>,
    /// True device confusion matrix (JSON or headerless CSV).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Shots per prepared basis state.
    #[arg(long, default_value_t = lgsim_core::mitigation::DEFAULT_CALIBRATION_SHOTS)]
    pub shots: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output JSON file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Full needs 2^m preparations; tensor needs two. Defaults by size.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, clap::Args)]
pub struct MitigateArgs {
    /// Counts JSON: a two-time counts table or `{"num_bits", "counts"}`.
    #[arg(long)]
    pub counts: PathBuf,
    /// Confusion matrix (JSON from `calibrate`, or headerless CSV).
    #[arg(long)]
    pub matrix: PathBuf,
    /// Output JSON file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for the bootstrap error of a two-time correlator.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, clap::Args)]
pub struct OracleArgs {
    /// JSON list of 8 probabilities (+++ first) or an object keyed by outcome.
    #[arg(long)]
    pub distribution: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<(), CliError> = match cli.command {
        Command::Scan(args) => commands::scan(args),
        Command::Calibrate(args) => commands::calibrate(args),
        Command::Mitigate(args) => commands::mitigate(args),
        Command::Oracle(args) => commands::oracle(args),
        Command::ListScenarios => {
            commands::list_scenarios();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
