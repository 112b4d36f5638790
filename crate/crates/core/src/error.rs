use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation and training stack.
#[derive(Debug, Error)]
pub enum QnnError {
    /// A caller violated an operation's preconditions (bad wire, shape, arity, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A configured resource ceiling (qubit count, Fock tensor size) would be exceeded.
    #[error("resource limit exceeded: {what} requires {required}, limit is {limit}")]
    ResourceLimit { what: String, required: u128, limit: u128 },

    /// Probability leaked out of the truncated Fock space beyond the configured tolerance.
    #[error(
        "truncation error in {gate}: norm deficit {deficit:.3e} exceeds tolerance {tolerance:.1e}; \
         increase the cutoff (currently {cutoff})"
    )]
    Truncation { gate: String, deficit: f64, tolerance: f64, cutoff: usize },

    /// A function evaluation produced NaN or infinity.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Training produced a non-finite loss.
    #[error("training aborted: non-finite loss at epoch {epoch}, batch {batch}")]
    TrainingDiverged { epoch: usize, batch: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column {column}: cannot parse {value:?} as a number")]
    Parse { row: usize, column: String, value: String },

    #[error("column {column} has zero variance")]
    ZeroVariance { column: String },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, QnnError>;

pub(crate) fn contract(msg: impl Into<String>) -> QnnError {
    QnnError::Contract(msg.into())
}
