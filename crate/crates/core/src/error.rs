use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("manifest {path}: {msg}")]
    Manifest { path: PathBuf, msg: String },

    #[error("view {view} has {found} rows, expected {expected}")]
    RowCountMismatch {
        view: usize,
        expected: usize,
        found: usize,
    },

    #[error("label at row {row} is {value}, expected +1 or -1")]
    InvalidLabel { row: usize, value: String },

    #[error("non-finite feature value in view {view}, row {row}")]
    NonFinite { view: usize, row: usize },

    #[error("duplicate feature index {index} in view {view}, row {row}")]
    DuplicateIndex {
        view: usize,
        row: usize,
        index: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("table {table} is not admissible for measure {measure}")]
    Inadmissible { measure: String, table: String },

    #[error("loss undefined for measure {measure} on table {table}")]
    DegenerateTable { measure: String, table: String },

    #[error("no admissible label tuple other than the truth for measure {0}")]
    EmptyAdmissibleSet(String),

    #[error("brute-force search limited to n <= {limit}, got n = {n}")]
    TooLarge { n: usize, limit: usize },

    #[error("working set is empty")]
    EmptyWorkingSet,

    #[error("Cholesky factorization of the view {view} regularizer failed")]
    Factorization { view: usize },

    #[error("QP solver stopped after {iterations} iterations with KKT residual {residual:e}")]
    QpNonConvergence {
        iterations: usize,
        residual: f64,
        alpha: Vec<f64>,
    },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model format: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
