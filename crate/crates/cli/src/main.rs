mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qnn_core::QnnError;

use config::Overrides;

#[derive(Parser)]
#[command(name = "qnn", version, about = "Hybrid quantum-classical regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dataset preprocessing
    Data {
        #[command(subcommand)]
        command: DataCommand,
    },
    /// Train a model on prepared data and write loss history, predictions and a manifest
    Train(Overrides),
    /// Predict with a trained model from an output directory
    Predict(Overrides),
    /// Expressibility, entangling capability and gradient-variance scan
    Descriptors(Overrides),
}

#[derive(Subcommand)]
enum DataCommand {
    /// Standardize, analyze, reduce with PCA and split the raw CSV
    Prepare(Overrides),
}

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

impl From<QnnError> for CliError {
    fn from(e: QnnError) -> Self {
        let code = match e {
            QnnError::ResourceLimit { .. } => 4,
            QnnError::NonFinite(_) | QnnError::TrainingDiverged { .. } | QnnError::Truncation { .. } => 3,
            QnnError::Contract(_)
            | QnnError::Schema(_)
            | QnnError::Parse { .. }
            | QnnError::ZeroVariance { .. }
            | QnnError::Io { .. }
            | QnnError::Csv(_) => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Data { command: DataCommand::Prepare(o) } => o.resolve().and_then(|c| commands::prepare(&c)),
        Command::Train(o) => o.resolve().and_then(|c| commands::train(&c)),
        Command::Predict(o) => o.resolve().and_then(|c| commands::predict_model(&c)),
        Command::Descriptors(o) => o.resolve().and_then(|c| commands::descriptors(&c)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
