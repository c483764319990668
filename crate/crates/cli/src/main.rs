//! `collapse-lab`: simulate pointer experiments, reconstruct effect sets,
//! run the acceptance criteria and parameter sweeps.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    /// Bad config or flags (exit 2).
    Config(String),
    /// Numerical breakdown or I/O failure (exit 3).
    Numeric(String),
    /// A criterion or check failed (exit 4).
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Failed(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<collapse_core::Error> for CliError {
    fn from(e: collapse_core::Error) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Numeric(format!("csv error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Numeric(format!("json error: {e}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "collapse-lab", version, about = "Spontaneous-collapse measurement simulations")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for ensembles (overrides the config).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "collapse-out")]
    out: PathBuf,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum Command {
    /// Run a trajectory ensemble and write the outcome distribution.
    Simulate,
    /// Reconstruct the effects of a probability functional.
    ExtractPovm,
    /// Run named acceptance criteria.
    Verify,
    /// Sweep the Stern-Gerlach separation or the Malus filter angle.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::ExtractPovm => "extract-povm",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("collapse-lab {}: {e}", cli.command.name());
            ExitCode::from(e.code())
        }
    }
}
