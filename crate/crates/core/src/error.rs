use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty batch")]
    EmptyBatch,

    #[error("unsupported model format version {0} (expected 1)")]
    FormatVersion(u64),

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("model file {path}: {source}")]
    ModelIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("incompatible operator: {0}")]
    IncompatibleOperator(String),

    #[error("singular matrix (pivot {pivot:e} below threshold)")]
    Singular { pivot: f64 },

    #[error("logistic fit did not converge after {iterations} iterations (gradient inf-norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("population of {size} is smaller than the {survivors} survivors required")]
    PopulationTooSmall { size: usize, survivors: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::DimensionMismatch { .. } | Error::EmptyBatch => 2,
            Error::FormatVersion(_)
            | Error::MalformedModel(_)
            | Error::ModelIo { .. }
            | Error::IncompatibleOperator(_) => 3,
            Error::Singular { .. } | Error::NonConvergence { .. } => 4,
            Error::PopulationTooSmall { .. } => 2,
            Error::Io { .. } | Error::Json(_) | Error::Csv(_) => 1,
        }
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}
