//! Crate-wide error type and result alias.

use thiserror::Error;

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum TmurError {
    /// A numeric argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Array shapes are incompatible.
    #[error("shape error: {0}")]
    Shape(String),
    /// A configuration value is invalid.
    #[error("config error: {0}")]
    Config(String),
    /// Dataset content is inconsistent (row counts, label ranges, missing files).
    #[error("data error: {0}")]
    Data(String),
    /// A file could not be parsed; messages carry row/column positions.
    #[error("parse error: {0}")]
    Parse(String),
    /// An object was used in an invalid state (e.g. a consumed gradient tape).
    #[error("state error: {0}")]
    State(String),
    /// A verification check failed.
    #[error("check failure: {0}")]
    Check(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl TmurError {
    pub fn domain(msg: impl Into<String>) -> Self {
        TmurError::Domain(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        TmurError::Shape(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        TmurError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        TmurError::Data(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        TmurError::Parse(msg.into())
    }

    pub fn state(msg: impl Into<String>) -> Self {
        TmurError::State(msg.into())
    }

    pub fn check(msg: impl Into<String>) -> Self {
        TmurError::Check(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, TmurError>;
