use thiserror::Error;

/// Errors raised by the solver and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("boundary not timelike (|a| = {speed} must be < 1)")]
    BoundaryNotTimelike { speed: f64 },
    #[error("value out of range: {0}")]
    Range(String),
    #[error("analysis error: {0}")]
    Analysis(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solution diverged at t = {time}")]
    Divergence { time: f64 },
    #[error("not a chirality element: {0}")]
    NotChirality(String),
    #[error("margin must be positive (got {0})")]
    MarginNotPositive(f64),
    #[error("certificate not applicable: {0}")]
    NotApplicable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
