//! Pipeline driver behind the `flowrisk` binary.
//!
//! Every subcommand reads one TOML config, writes its outputs under the
//! configured directory and leaves a small log with the config fingerprint.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod config;
pub mod error;
mod session;
mod stages;

pub use config::{Overrides, PipelineConfig};
pub use error::CliError;
pub use session::Session;

#[derive(Debug, Parser)]
#[command(
    name = "flowrisk",
    version,
    about = "Thrombosis risk classification from per-cell flow features"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Pipeline configuration file.
    #[arg(long, global = true, default_value = "flowrisk.toml")]
    pub config: PathBuf,

    /// Overrides the input table path.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Overrides the output directory.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// Replaces every seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic table with planted ground truth.
    Synth,
    /// Ingest the table and write the stratified split.
    Prepare,
    /// Column screening and the coefficient-importance cutoff.
    Screen,
    /// Validation metrics of the screening model.
    TrainBaseline,
    /// Expand base features into the candidate pool.
    Engineer,
    /// LOFO recursive elimination.
    Select,
    /// Fit the final model and score it once on the test split.
    Evaluate,
    /// Permutation importance on the validation split.
    Importance,
    /// Closed-form expression and feature manifest.
    Export,
    /// Every stage from prepare to export.
    RunAll,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        input: cli.input.clone(),
        output_dir: cli.output_dir.clone(),
        seed: cli.seed,
    };
    let config = PipelineConfig::load(&cli.config, &overrides)?;
    let mut session = Session::new(config);
    session.run(cli.command)
}
