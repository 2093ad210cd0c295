use thiserror::Error;

/// Errors raised by the rate calculator and its verification machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("word length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty Bell word")]
    EmptyWord,

    #[error("invalid Bell-diagonal distribution: {0}")]
    InvalidDistribution(String),

    #[error("parameter `{name}` out of range: {value} ({reason})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("density-matrix oracle: {0}")]
    Oracle(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::OutOfRange {
        name,
        value,
        reason,
    }
}
