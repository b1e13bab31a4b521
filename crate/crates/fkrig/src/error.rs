use thiserror::Error;

/// Errors produced by the estimation, prediction, and I/O layers.
#[derive(Error, Debug)]
pub enum Error {
    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("selected inverse does not cover entry ({row}, {col}) required by the trace")]
    PatternMismatch { row: usize, col: usize },

    #[error("profile year {year} is not among the modeled years")]
    UnmodeledYear { year: i32 },

    #[error("degenerate smoothing: effective dimension {trace:.3} >= observation count {n}")]
    DegenerateSmoothing { trace: f64, n: usize },

    #[error("likelihood evaluation failed: {0}")]
    LikelihoodEvaluation(String),

    #[error("covariance fit failed for component {component}: {reason}")]
    FitFailure { component: usize, reason: String },

    #[error("profile {profile} failed validation: {reason}")]
    Validation { profile: String, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("total sum of squares is zero; variance ratio undefined")]
    UndefinedRatio,

    #[error("problem too large: {0}")]
    SizeLimit(String),

    #[error("stage `{0}` has not been run; its outputs are missing")]
    MissingStage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
