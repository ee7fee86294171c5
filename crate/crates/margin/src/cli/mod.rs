//! Command-line driver: configuration, persistence and data interchange
//! for end-to-end experiments.
//!
//! Subcommands: `gen` (synthesize a benchmark), `train` (fit encoder and
//! prototypes, write checkpoint + trace), `eval` (classify a CSV with a
//! checkpoint, write report.json), `kappa` (per-class concentration
//! report for any embedding CSV). Exit codes: 0 success, 1 invalid
//! configuration or arguments, 2 runtime failure.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod csv_io;
pub mod report;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::error::Error;

#[derive(Parser)]
#[command(
    name = "margin",
    about = "Imbalance-aware hyperspherical metric learning experiments",
    version
)]
struct Cli {
    /// Run configuration file (flat key = value text)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the configuration file
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic long-tailed benchmark as CSV splits
    Gen,
    /// Train on a generated dataset directory (train.csv, val.csv)
    Train {
        /// Directory holding train.csv and val.csv
        #[arg(long)]
        data: PathBuf,
    },
    /// Evaluate a checkpoint against an embedding CSV
    Eval {
        /// Checkpoint file written by `train`
        #[arg(long)]
        checkpoint: PathBuf,
        /// Embedding CSV to classify
        #[arg(long)]
        data: PathBuf,
    },
    /// Report per-class concentration geometry for an embedding CSV
    Kappa {
        /// Embedding CSV to analyze
        #[arg(long)]
        data: PathBuf,
    },
}

fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        1
    } else {
        2
    }
}

/// Entry point for the `margin` binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Gen => commands::cmd_gen(cli.config.as_deref(), cli.seed, cli.out.as_deref()),
        Command::Train { data } => {
            commands::cmd_train(cli.config.as_deref(), cli.seed, data, cli.out.as_deref())
        }
        Command::Eval { checkpoint, data } => {
            commands::cmd_eval(checkpoint, data, cli.out.as_deref())
        }
        Command::Kappa { data } => commands::cmd_kappa(data),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
