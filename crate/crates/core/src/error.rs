use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("column {0} has zero standard deviation")]
    ConstantColumn(usize),

    #[error("column {0} has zero norm")]
    ZeroNormColumn(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("labels must be binary (0/1 or -1/+1)")]
    NonBinaryLabels,

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no finite lambda_max: neither trivial solution is attainable")]
    NoFiniteLambdaMax,

    #[error("k = {k} exceeds the number of samples n = {n}")]
    KTooLarge { k: usize, n: usize },

    #[error("labels need at least one positive and one negative example")]
    DegenerateLabels,

    #[error("design is not orthonormal on the support (deviation {0:.3e})")]
    NotOrthogonal(f64),

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
