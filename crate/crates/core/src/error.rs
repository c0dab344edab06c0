use alloc::string::String;

use thiserror::Error;

use crate::expr::ParseError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rate expression: {0}")]
    Parse(#[from] ParseError),
    #[error("{which} rate at index {index} is {value}; rates must be finite and positive")]
    InvalidRate { which: &'static str, index: usize, value: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    Domain(String),
    #[error("not certifiable: {0}")]
    NonCertifiable(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn uncertified(msg: impl Into<String>) -> Self {
        Error::NonCertifiable(msg.into())
    }
}
