use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("matrix market parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported matrix market field or format: {0}")]
    Unsupported(String),

    #[error("index ({row}, {col}) out of range for {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("invalid matrix structure: {0}")]
    InvalidStructure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel plan does not match variant: {0}")]
    PlanMismatch(String),

    #[error("every SpMV candidate failed the reference cross-check")]
    AllCandidatesDisqualified,

    #[error("zero or missing pivot at row {row}")]
    ZeroPivot { row: usize },

    #[error("{solver} breakdown: {reason}")]
    Breakdown { solver: &'static str, reason: String },

    #[error("policy file line {line}: {msg}")]
    Policy { line: usize, msg: String },

    #[error("workspace budget of {budget} bytes cannot hold the solver floor ({needed} bytes)")]
    InfeasibleWorkspace { budget: u64, needed: u64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
