use thiserror::Error;

/// Errors raised by histogram construction and the ANOHT analyses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The caller supplied data that cannot be analysed (empty, non-finite, mismatched lengths).
    #[error("rejected input: {0}")]
    RejectedInput(String),
    /// A scale or spread is zero where a positive one is required.
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The exhaustive search was asked for a sample larger than its hard cap.
    #[error("exhaustive search refused: n = {n} exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn rejected(msg: impl Into<String>) -> Error {
    Error::RejectedInput(msg.into())
}
