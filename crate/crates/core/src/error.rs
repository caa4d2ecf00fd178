use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("missing required column {0:?}")]
    MissingColumn(String),

    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),

    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: expected {expected} fields, found {found}")]
    Arity {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: {what}")]
    InvalidValue { row: usize, what: String },

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("{what} out of range: {value} (allowed {allowed})")]
    OutOfRange {
        what: &'static str,
        value: String,
        allowed: String,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("undefined statistic: {0}")]
    Undefined(&'static str),

    #[error("no confidence interval data and no global epsilon configured")]
    MissingCi,

    #[error("trace too short: {duration} s, need at least {needed} s")]
    TraceTooShort { duration: f64, needed: f64 },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("non-finite input value")]
    NonFiniteInput,

    #[error("program references feature {index} but only {available} are available")]
    UnknownFeature { index: usize, available: usize },

    #[error("unsupported format version {0}")]
    Version(u32),

    #[error("fold {fold} of repeat {repeat}: {source}")]
    Fold {
        repeat: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
