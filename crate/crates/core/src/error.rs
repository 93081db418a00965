use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("position ({x:.3}, {y:.3}) lies outside the {side} m area")]
    BoundaryViolation { x: f64, y: f64, side: f64 },

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no pending tasks to allocate channels for")]
    EmptyAllocation,

    #[error("no link: zero channels allocated")]
    NoLink,

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("encoding length mismatch: expected {expected}, got {got}")]
    Encoding { expected: usize, got: usize },

    #[error("nothing to optimize: no pending tasks")]
    EmptyProblem,

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("obstacle generation failed: {0}")]
    GenerationFailure(String),

    #[error("planning failed: {0}")]
    PlanningFailure(String),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing policy `{0}` in report rows")]
    MissingPolicy(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
