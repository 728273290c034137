//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by construction, validation, and solving.
#[derive(Debug, Error)]
pub enum Error {
    /// A domain-type invariant failed at construction (hermiticity, PSD,
    /// completeness, trace normalization, ...).
    #[error("invariant violation: {0}")]
    Invalid(String),

    /// A parameter is outside its documented range (e.g. n > m).
    #[error("domain error: {0}")]
    Domain(String),

    /// Dimensions or lengths of two inputs do not match.
    #[error("mismatch: {0}")]
    Mismatch(String),

    /// The input is degenerate for the requested operation (zero witness
    /// family, vanishing dual mass, nonpositive denominator).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The conic solver did not return an optimal solution.
    #[error("solver failure: {0}")]
    Solver(String),
}

impl Error {
    /// True for errors caused by bad inputs rather than solver breakdown.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Solver(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
