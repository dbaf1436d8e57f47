//! `distshap`: distributional Shapley data valuation from the command line.
//!
//! Exit codes: 0 ok, 1 check failure, 2 config error, 3 data error.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "distshap", version = output::VERSION, about = "Distributional Shapley data valuation")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run configuration.
    config: PathBuf,
    /// Override a config key, e.g. `--set estimator.seed=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate distributional values and write a value CSV.
    Estimate(ConfigArgs),
    /// Check exact values and the Shapley axioms on small instances.
    Verify {
        /// TOML run configuration; optional.
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Largest fixture size to enumerate.
        #[arg(long, default_value_t = 8)]
        max_n: usize,
        #[arg(long, hide = true, allow_negative_numbers = true)]
        tolerance_override: Option<f64>,
    },
    /// Remove train points in value order and record the utility curve.
    Remove {
        #[command(flatten)]
        args: ConfigArgs,
        /// Value CSV covering the train set.
        #[arg(long)]
        values: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// desc, asc, random or random:<seed>.
        #[arg(long, default_value = "desc")]
        ordering: String,
    },
    /// Run the seller/buyer pricing study.
    Price(ConfigArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config("--threads", e))?;
    }
    match cli.command {
        Command::Estimate(a) => commands::estimate(&LoadedConfig::load(Some(&a.config), &a.overrides)?),
        Command::Verify {
            config,
            overrides,
            max_n,
            tolerance_override,
        } => commands::verify(
            &LoadedConfig::load(config.as_deref(), &overrides)?,
            max_n,
            tolerance_override,
        ),
        Command::Remove {
            args,
            values,
            steps,
            ordering,
        } => commands::remove(
            &LoadedConfig::load(Some(&args.config), &args.overrides)?,
            &values,
            steps,
            &ordering,
        ),
        Command::Price(a) => commands::price(&LoadedConfig::load(Some(&a.config), &a.overrides)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
