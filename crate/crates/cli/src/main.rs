//! `esb` — empirical-prior sparse Bayesian regression at the command line.
//!
//! Subcommands: `fit` (model-space sampler), `enumerate` (exact support
//! posterior), `predict` (posterior predictive), `check-theory`
//! (verification suite), `simulate` (synthetic experiments).
//!
//! Exit codes: 0 success, 2 input/validation error, 3 numerical error,
//! 4 guard error (problem too large for an exhaustive method). Results go
//! to the requested output paths; stdout only names them, diagnostics go
//! to stderr.

mod commands;
mod common;

use clap::{Parser, Subcommand};
use common::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "esb", version, about = "Empirical-prior sparse Bayesian linear regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the support posterior by Metropolis-Hastings and write draws
    /// plus a summary.
    Fit(FitArgs),
    /// Enumerate the exact support posterior (small problems only).
    Enumerate(EnumerateArgs),
    /// Posterior predictive mean/variance/intervals at new design rows.
    Predict(PredictArgs),
    /// Run the built-in verification suite (tail bounds, restricted
    /// eigenvalues, Gaussian-limit distance).
    CheckTheory(CheckTheoryArgs),
    /// Run a synthetic experiment grid and write aggregate reports.
    Simulate(SimulateArgs),
}

#[derive(clap::Args, Debug)]
pub struct DataArgs {
    /// Dataset path (CSV: header row, response first; or ESB1 binary).
    #[arg(long)]
    pub data: PathBuf,
    /// Dataset file format.
    #[arg(long, value_enum, default_value_t = common::DataFormat::Csv)]
    pub format: common::DataFormat,
    /// Hyperparameter JSON (fields alpha, gamma, a0, b0, c, a, R); defaults
    /// are derived from the data shape when omitted.
    #[arg(long)]
    pub hyper: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Sampler configuration JSON (n_iter, burn_in, seed, init_model,
    /// move_probs).
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Overrides the sampler seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for samples.jsonl and summary.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output path for the model-posterior table JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// CSV of prediction design rows (header row, p columns).
    #[arg(long)]
    pub xtilde: PathBuf,
    /// Reuse an enumerated table as the posterior source.
    #[arg(long, conflicts_with = "samples")]
    pub table: Option<PathBuf>,
    /// Reuse sampler draws (JSON Lines) as the posterior source.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Sampler configuration JSON (used when no source file is given and
    /// the problem is too large to enumerate).
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Seed for the predictive draws (and the sampler fallback).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Two-sided interval level.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Number of predictive draws.
    #[arg(long, default_value_t = 20_000)]
    pub draws: usize,
    /// Output JSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct CheckTheoryArgs {
    /// Seed for every Monte Carlo check.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Draws per tail check.
    #[arg(long, default_value_t = 100_000)]
    pub mc: usize,
    /// Output JSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    /// Experiment grid JSON: {"configs": [...]}.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for report.csv, report.json, trials.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    common::init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => commands::fit::run(args),
        Command::Enumerate(args) => commands::enumerate::run(args),
        Command::Predict(args) => commands::predict::run(args),
        Command::CheckTheory(args) => commands::check_theory::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
