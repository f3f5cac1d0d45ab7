//! `tpplab`: command-line pipeline over the tpplab library.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tpplab::TppError;

#[derive(Parser, Debug)]
#[command(name = "tpplab", version, about = "Temporal point process modeling of behavior onset sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Collapse interval annotations into onset sequences (or re-validate a dataset file).
    Ingest(IngestArgs),
    /// Sample the posterior of one model family with NUTS.
    Fit(FitArgs),
    /// Simulate a synthetic dataset by Ogata thinning.
    Simulate(SimulateArgs),
    /// Goodness-of-fit diagnostics for a fitted posterior.
    Diagnose(DiagnoseArgs),
    /// PSIS-LOO, MAPE and window-occupancy ROC-AUC for a fitted posterior.
    Evaluate(EvaluateArgs),
    /// Posterior-predictive count bands for one session.
    Forecast(ForecastArgs),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Annotation CSV: participant_id,session_id,behavior,start,stop.
    #[arg(long, requires = "sessions", conflicts_with = "dataset")]
    pub annotations: Option<PathBuf>,
    /// Session CSV: session_id,participant_id,session_start,session_end.
    #[arg(long)]
    pub sessions: Option<PathBuf>,
    /// Existing JSON-lines dataset to validate and re-emit instead of CSV input.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Snap annotation times to the nearest 250 ms sample instead of rejecting them.
    #[arg(long)]
    pub tolerate_offgrid: bool,
    /// Drop sessions with validation violations instead of failing.
    #[arg(long)]
    pub lenient: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum SamplerArg {
    Nuts,
    Rwm,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// JSON-lines dataset.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Model family: HPP, NHPP_PL, HAWKES_EXP, HAWKES_2EXP or HAWKES_PL.
    #[arg(long)]
    pub family: String,
    /// JSON prior specification; defaults to the family's built-in priors.
    #[arg(long)]
    pub prior_file: Option<PathBuf>,
    /// Number of chains.
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    /// Warmup iterations per chain.
    #[arg(long, default_value_t = 6000)]
    pub warmup: usize,
    /// Retained draws per chain.
    #[arg(long, default_value_t = 4000)]
    pub draws: usize,
    /// Target acceptance statistic for step-size adaptation.
    #[arg(long, default_value_t = 0.99)]
    pub target_accept: f64,
    /// Maximum tree depth.
    #[arg(long, default_value_t = 10)]
    pub max_depth: usize,
    /// Sampler.
    #[arg(long, value_enum, default_value_t = SamplerArg::Nuts)]
    pub sampler: SamplerArg,
    /// Random seed; derived from the inputs and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exit with code 4 when any R-hat exceeds 1.05.
    #[arg(long)]
    pub strict: bool,
    /// Output directory for the posterior archive.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Model family (must match the parameter file when both are given).
    #[arg(long)]
    pub family: Option<String>,
    /// JSON parameter file: {"family": ..., "params": {name: value}}.
    #[arg(long, conflicts_with = "params")]
    pub params_file: Option<PathBuf>,
    /// Inline parameters as name=value pairs, e.g. mu=0.1,alpha=0.5,beta=1.
    #[arg(long, requires = "family")]
    pub params: Option<String>,
    /// Number of sessions.
    #[arg(long)]
    pub sessions: Option<usize>,
    /// Session duration in minutes.
    #[arg(long = "T", alias = "duration", conflicts_with = "duration_file")]
    pub duration: Option<f64>,
    /// File with one duration (minutes) per line, cycled if --sessions exceeds it.
    #[arg(long)]
    pub duration_file: Option<PathBuf>,
    /// Per-session explosion guard.
    #[arg(long, default_value_t = tpplab::simulate::DEFAULT_MAX_EVENTS)]
    pub max_events: usize,
    /// Random seed; derived from the inputs and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// JSON-lines dataset the posterior was fitted to.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Posterior archive directory written by `fit`.
    #[arg(long)]
    pub posterior: PathBuf,
    /// Monte Carlo trials for the count-distribution comparison.
    #[arg(long, default_value_t = tpplab::simulate::DEFAULT_COUNT_TRIALS)]
    pub trials: usize,
    /// Random seed; derived from the inputs and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// JSON-lines dataset.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Posterior archive directory written by `fit`.
    #[arg(long)]
    pub posterior: PathBuf,
    /// Forecast horizons in minutes.
    #[arg(long, value_delimiter = ',', default_values_t = tpplab::evaluate::DEFAULT_DTS)]
    pub dt_list: Vec<f64>,
    /// Window starts per session for MAPE.
    #[arg(long, default_value_t = tpplab::evaluate::DEFAULT_MAPE_STARTS)]
    pub starts: usize,
    /// Forecast trajectories per MAPE window.
    #[arg(long, default_value_t = tpplab::evaluate::DEFAULT_MAPE_TRAJ)]
    pub traj: usize,
    /// Window starts per session for ROC-AUC.
    #[arg(long, default_value_t = tpplab::evaluate::DEFAULT_AUC_STARTS)]
    pub auc_starts: usize,
    /// Average occupancy over posterior draws rather than using the posterior mean.
    #[arg(long)]
    pub draw_averaged: bool,
    /// Monte Carlo trials for the Wasserstein count summary.
    #[arg(long, default_value_t = tpplab::simulate::DEFAULT_COUNT_TRIALS)]
    pub trials: usize,
    /// Random seed; derived from the inputs and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ForecastArgs {
    /// JSON-lines dataset.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Posterior archive directory written by `fit`.
    #[arg(long)]
    pub posterior: PathBuf,
    /// Session to forecast.
    #[arg(long)]
    pub session: String,
    /// Forecast origin in minutes; onsets up to and including it are conditioned on.
    #[arg(long)]
    pub t_start: f64,
    /// Horizon in minutes.
    #[arg(long)]
    pub dt: f64,
    /// Number of sampled trajectories.
    #[arg(long, default_value_t = 250)]
    pub traj: usize,
    /// Number of grid points across the horizon.
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    /// Random seed; derived from the inputs and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_MODEL: u8 = 3;
pub const EXIT_DIAGNOSTIC: u8 = 4;

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: msg.into(),
        }
    }
}

impl From<TppError> for CliError {
    fn from(e: TppError) -> Self {
        let code = match e {
            TppError::Explosion { .. } | TppError::Sampler(_) | TppError::Domain(_) => EXIT_MODEL,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("TPPLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::input(format!("TPPLAB_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::input(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Fit(a) => commands::fit(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Diagnose(a) => commands::diagnose(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Forecast(a) => commands::forecast(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
