use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error: column `{column}` not found in header")]
    MissingColumn { column: String },

    #[error("parse error at row {row}, column `{column}`: cannot parse {value:?} as {expected}")]
    Parse {
        row: usize,
        column: String,
        value: String,
        expected: &'static str,
    },

    #[error("format error at row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("series `{name}` has length {found}, expected {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("series `{name}` has a non-finite value at index {index}")]
    NonFinite { name: String, index: usize },

    #[error("series `{name}`: {reason}")]
    InvalidTrials { name: String, reason: String },

    #[error("no series named `{0}`")]
    UnknownSeries(String),

    #[error("duplicate series name `{0}`")]
    DuplicateSeries(String),

    #[error("invalid system spec: {0}")]
    InvalidSpec(String),

    #[error("trajectory diverged at step {step}: {variable} = {value}")]
    Divergence {
        step: usize,
        variable: &'static str,
        value: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient data: need at least {required} samples, got {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("insufficient library: need {required} candidate neighbors, have {available}")]
    InsufficientLibrary { required: usize, available: usize },

    #[error("time index {0} is not a point of the manifold")]
    UnknownTime(usize),

    #[error("degenerate variance: {0} is constant")]
    DegenerateVariance(&'static str),

    #[error("θ carries no variation; partial correlation undefined")]
    ControlDegenerate,

    #[error("collinearity: {0} is perfectly correlated with the control")]
    Collinearity(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by a statistically degenerate input rather
    /// than a bad configuration.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateVariance(_) | Error::ControlDegenerate | Error::Collinearity(_)
        )
    }
}
