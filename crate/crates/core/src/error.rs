use thiserror::Error;

use crate::search::SearchResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("coordinate {index} = {value} lies outside [0, 1]")]
    OutOfDomain { index: usize, value: f64 },

    #[error("objective returned {0}, outside [0, 1]")]
    ObjectiveRange(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("cell index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: u64, limit: u64 },

    #[error("oracle already applied to this state; prepare a fresh state")]
    OracleAlreadyApplied,

    #[error("signal measured before the oracle was applied")]
    OracleNotApplied,

    #[error("search needs {needed} partition tests but max_tests is {max}")]
    TestBudgetExceeded { needed: u32, max: u32 },

    /// The search ran to completion but the surviving index is not marked.
    #[error("search verification failed: h({}) = 0 after {} tests", .0.found, .0.trace.len())]
    VerificationFailed(Box<SearchResult>),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
