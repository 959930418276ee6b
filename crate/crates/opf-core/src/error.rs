//! Crate-wide error type.

/// Errors produced by the tracking toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a precondition (non-finite value, size mismatch, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value is out of its documented range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An operation needed more trajectory history than is available.
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    /// A matrix that must be positive definite was (numerically) singular.
    #[error("numerical singularity: {0}")]
    NumericalSingularity(String),

    /// A weight update produced no usable posterior (all weights vanished).
    #[error("degenerate weight update: {0}")]
    DegenerateUpdate(String),

    /// Occluder selection had no candidate object to choose from.
    #[error("no occluder candidate: {0}")]
    NoCandidate(String),

    /// A scenario file or run configuration failed validation.
    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
