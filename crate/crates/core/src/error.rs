use thiserror::Error;

/// Errors raised by the aggregation algorithms, the oracle and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate state: {0}")]
    Degenerate(String),

    /// A round-protocol method was called out of order (e.g. predicting before admission).
    #[error("protocol violation: {0}")]
    Protocol(String),

    /// An exhaustive computation would exceed its size guard; nothing was truncated.
    #[error("enumeration guard exceeded: estimated {estimate} items, limit {limit}")]
    GuardExceeded { estimate: f64, limit: f64 },

    #[error("comparator class is empty")]
    EmptyClass,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
