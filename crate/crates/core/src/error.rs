use std::io;

use thiserror::Error;

use crate::grid::ConfigViolation;

/// Errors produced by the synthesis, theory and statistics routines.
#[derive(Debug, Error)]
pub enum MfouError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed (non-convergence, degenerate data).
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("invalid configuration: {}", format_violations(.0))]
    InvalidConfig(Vec<ConfigViolation>),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

fn format_violations(v: &[ConfigViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, MfouError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(MfouError::Domain(msg.into()))
}

pub(crate) fn numeric<T>(msg: impl Into<String>) -> Result<T> {
    Err(MfouError::Numeric(msg.into()))
}
