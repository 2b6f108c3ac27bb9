use thiserror::Error;

/// Errors raised by the partition, circuit and search operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("invalid construction: {0}")]
    Construction(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
