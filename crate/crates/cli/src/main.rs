//! `gue` command-line interface.

mod config;
mod evalues;
mod failure;
mod simulate;
mod test_data;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "gue", version, about = "Generalized universal e-values with e-BH multiple testing")]
struct Cli {
    /// Worker threads for replications and bootstrap draws (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation sweep and write metrics.csv, learning_rates.csv and manifest.json.
    Simulate(SimulateArgs),
    /// Test whether a covariate matters at any quantile of a CSV dataset.
    Test(TestArgs),
    /// Apply e-BH to a list of e-values.
    Ebh(EvalueArgs),
    /// Merge e-BH-adjusted e-values into one e-value.
    Merge(EvalueArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated quantile levels, overriding the config's grid.
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    #[arg(long = "split-fraction")]
    split_fraction: Option<f64>,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// CSV file with numeric columns (an optional header row is detected).
    data: PathBuf,
    /// Column index of the response.
    #[arg(long, default_value_t = 0)]
    target: usize,
    /// Column index of the covariate under test (default: first non-target column).
    #[arg(long)]
    covariate: Option<usize>,
    /// Comma-separated quantile levels (default: 0.02, 0.04, ..., 0.98).
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "split-fraction", default_value_t = 0.5)]
    split_fraction: f64,
    #[arg(long = "bootstrap-reps", default_value_t = 100)]
    bootstrap_reps: usize,
    #[arg(long = "omega-cap")]
    omega_cap: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct EvalueArgs {
    /// E-values; alternatively use --file.
    #[arg(allow_negative_numbers = true)]
    values: Vec<String>,
    /// File of e-values separated by whitespace or commas.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long)]
    json: bool,
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::runtime(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Test(args) => test_data::run(args),
        Command::Ebh(args) => evalues::run_ebh(args),
        Command::Merge(args) => evalues::run_merge(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
