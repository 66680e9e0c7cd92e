use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition (wrong length, unassigned spin, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("problem too large for {method}: {size} variables exceeds cap {cap}")]
    TooLarge {
        method: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("unknown solver `{name}` (registered: {registered})")]
    UnknownSolver { name: String, registered: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid plan:\n  - {}", .0.join("\n  - "))]
    InvalidPlan(Vec<String>),

    /// A certified reference was beaten, which means the certificate is wrong.
    #[error("certificate violated on instance {instance}: solver {solver} found {found} below certified {certified}")]
    CertificateViolated {
        instance: usize,
        solver: String,
        found: f64,
        certified: f64,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::CertificateViolated { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
