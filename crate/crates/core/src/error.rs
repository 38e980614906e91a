use thiserror::Error;

/// Errors raised by the toolkit. Every variant is a precondition rejection:
/// the caller asked for something the inputs cannot support.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate set: {0}")]
    DegenerateSet(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("below mesh resolution: {0}")]
    BelowResolution(String),
    #[error("polar set: {0}")]
    PolarSet(String),
    #[error("rank deficient at degree {degree}: the measure does not induce a norm on polynomials of this degree")]
    RankDeficient { degree: usize },
    #[error("sets overlap: {0}")]
    Overlap(String),
    #[error("search budget exceeded: {0}")]
    Budget(String),
    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
