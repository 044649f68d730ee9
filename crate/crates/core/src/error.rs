use std::path::PathBuf;

use crate::train::TrainRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("arity error: {0}")]
    Arity(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("invalid distribution spec: {0}")]
    Spec(String),

    #[error("ingestion error at row {row}, column {column}: {message}")]
    Ingestion {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence {
        epoch: usize,
        loss: f64,
        last_finite: Option<Box<TrainRecord>>,
    },

    #[error("model invariant violated: {0}")]
    Model(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("construction check failed: {0}")]
    Construction(String),

    #[error("size error: parameter count {count} exceeds cap {cap}")]
    Size { count: usize, cap: usize },

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unknown experiment `{name}`; known experiments: {known}")]
    Registry { name: String, known: String },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("no table named `{0}`")]
    MissingTable(String),

    #[error("table `{0}` is empty")]
    EmptyTable(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
