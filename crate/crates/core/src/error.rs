use thiserror::Error;

/// Errors raised by the stability laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// Input lies outside the domain of an operation (all-zero weights,
    /// a vanishing normalizer, a vector off its constraint set).
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("shape error: expected length {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    /// No proved stability regime covers the requested combination.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("dimension {n} exceeds the materialization limit {limit}")]
    TooLarge { n: u64, limit: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn ensure_same_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Shape { expected, found });
    }
    Ok(())
}
