use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),
    #[error("problem has {atoms} atoms on one side, cap is {cap}; subsample first")]
    SizeCap { atoms: usize, cap: usize },
    #[error("non-finite state at t = {time} (particle {particle})")]
    NonFinite { time: f64, particle: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
