//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid symbol name {0:?}")]
    InvalidSymbol(String),

    #[error("multiset difference underflow at symbol {symbol}: have {have}, need {need}")]
    DifferenceUnderflow {
        symbol: String,
        have: u64,
        need: u64,
    },

    #[error("count overflow on symbol {0}")]
    CountOverflow(String),

    #[error("rule {rule} is not applicable to {config}")]
    NotApplicable { rule: String, config: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed machine: {0}")]
    MalformedMachine(String),

    #[error("execution error: {0}")]
    Execution(String),

    #[error("state space not closed within {iters} iterations ({known} state configurations so far)")]
    StateSpaceNotClosed { iters: usize, known: usize },

    #[error("system carries no state encoding")]
    MissingEncoding,

    #[error("unsupported antiport feature: {0}")]
    UnsupportedAntiport(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    /// Short machine-readable class tag, used by the CLI for exit reporting.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidSymbol(_) => "invalid-symbol",
            Error::DifferenceUnderflow { .. } => "difference-underflow",
            Error::CountOverflow(_) => "count-overflow",
            Error::NotApplicable { .. } => "not-applicable",
            Error::Parse { .. } => "parse",
            Error::MalformedMachine(_) => "malformed-machine",
            Error::Execution(_) => "execution",
            Error::StateSpaceNotClosed { .. } => "state-space-not-closed",
            Error::MissingEncoding => "missing-encoding",
            Error::UnsupportedAntiport(_) => "unsupported-antiport",
            Error::Invalid(_) => "invalid",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
