//! Error type shared by every module in the crate.

use std::path::PathBuf;
use thiserror::Error;

/// Coarse classification used by callers (the CLI maps these to exit codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad configuration or invalid arguments.
    Usage,
    /// Problems with input files, schemas, or persisted models.
    Data,
    /// Non-finite values encountered during numeric work.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: non-numeric cell {value:?} at line {line}, column {column:?}")]
    NonNumericCell {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },

    #[error("target column {target:?} not found; available columns: {available:?}")]
    TargetNotFound { target: String, available: Vec<String> },

    #[error("column {column:?} not found; available columns: {available:?}")]
    ColumnNotFound { column: String, available: Vec<String> },

    #[error("{context}: need at least {min} rows, got {got}")]
    TooFewRows {
        context: &'static str,
        min: usize,
        got: usize,
    },

    #[error("{context}: expected {expected} {unit}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        unit: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{context}: input is empty")]
    EmptyInput { context: &'static str },

    #[error(
        "split fraction {fraction} on {n_rows} rows leaves an empty side \
         ({n_train} train / {n_test} test)"
    )]
    EmptySplitSide {
        fraction: f64,
        n_rows: usize,
        n_train: usize,
        n_test: usize,
    },

    #[error("invalid configuration: {reason}")]
    Config { reason: String },

    #[error("non-finite training loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("non-finite target value at row {row}")]
    NonFiniteTarget { row: usize },

    #[error("memory bank is empty; dissimilarity is undefined")]
    EmptyMemory,

    #[error("model file is corrupt: {reason}")]
    ModelFormat { reason: String },

    #[error("unsupported model format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config { .. } => ErrorCategory::Usage,
            Error::NonFiniteLoss { .. } | Error::NonFiniteTarget { .. } => ErrorCategory::Numeric,
            _ => ErrorCategory::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
