use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid cutoff: {0}")]
    InvalidCutoff(String),

    #[error("invalid filter order {0}, must be >= 1")]
    InvalidOrder(usize),

    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("SNR undefined: perturbation has zero energy")]
    UndefinedSnr,

    #[error("degenerate signal: filtered signal has zero energy")]
    DegenerateSignal,

    #[error("degenerate noise: shaped noise has zero energy")]
    DegenerateNoise,

    #[error("invalid length {0}, need at least 2 samples")]
    InvalidLength(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported signal: {0}")]
    UnsupportedSignal(String),

    #[error("external classifier failed: {message}")]
    ClassifierFailure { message: String, stderr: String },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("margin undefined: {0}")]
    UndefinedMargin(String),

    #[error("no eligible threshold leaves at least {min_count} records on each side ({n} records total)")]
    InfeasibleMargin { n: usize, min_count: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("missing annotation for record {0}")]
    AnnotationMissing(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
