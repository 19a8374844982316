use thiserror::Error;

/// Errors produced while constructing quantum objects or running protocols.
#[derive(Debug, Error)]
pub enum LgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid unitary: {0}")]
    InvalidUnitary(String),

    #[error("invalid projector set: {0}")]
    InvalidProjectors(String),

    #[error("invalid detector: {0}")]
    InvalidDetector(String),

    #[error("outcome index {index} out of range (have {count} outcomes)")]
    OutcomeOutOfRange { index: usize, count: usize },

    #[error("protocol has no ambiguous detector but an ambiguous quantity was requested")]
    MissingDetector,

    #[error("q-label count {labels} does not match outcome count {outcomes}")]
    LabelMismatch { labels: usize, outcomes: usize },

    #[error("no root found: {0}")]
    NoRoot(String),

    #[error("empty contour set")]
    EmptyContours,

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, LgError>;
