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

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("header does not match schema: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("row {row}: expected {expected} fields, found {found}")]
    ArityMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {col}: unknown category {value:?}")]
    UnknownCategory {
        row: usize,
        col: usize,
        value: String,
    },

    #[error("row {row}, column {col}: cannot parse {value:?} as a number")]
    UnparsableNumber {
        row: usize,
        col: usize,
        value: String,
    },

    #[error("row {row}: class label is missing")]
    MissingClass { row: usize },

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("missingness rate {0} outside [0, 1)")]
    RateOutOfRange(f64),

    #[error("cannot split {n} rows into {k} folds")]
    TooFewRows { n: usize, k: usize },

    #[error("training data contains masked cells")]
    MaskedTrainingData,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("decision node {node} received no training rows; tree and data do not match")]
    ZeroRouted { node: usize },

    #[error("leaf density needs at least one row")]
    EmptyLeaf,

    #[error("uniform leaf requires a bounded cell, feature {feature} is unbounded")]
    UnboundedCell { feature: usize },

    #[error("uniform leaf cell has zero volume")]
    ZeroVolume,

    #[error("circuit is not a generative decision tree: {0}")]
    NotGeDT(String),

    #[error("forest combination mode mismatch: expected {expected}, model is {found}")]
    ModeMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("model file is corrupted: {0}")]
    Corrupted(String),

    #[error("unsupported model format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u64, supported: u64 },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
