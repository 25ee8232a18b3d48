use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value {what} at (j = {j}, p = {p})")]
    NonFiniteSample { what: &'static str, j: i64, p: i64 },
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical abort at t = {t}: {reason}")]
    NumericalAbort { t: f64, reason: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the batch harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::InvalidArgument(_) | Error::InvalidLattice(_) => 1,
            Error::InvariantViolation(_) | Error::NotUnitary { .. } => 2,
            Error::NumericalAbort { .. } | Error::NonFinite(_) | Error::NonFiniteSample { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
