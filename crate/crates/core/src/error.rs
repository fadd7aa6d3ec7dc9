//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by validation, solving, and file ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// A dimension or weight that must be strictly positive was not.
    #[error("non-positive dimension: {field} = {value}")]
    NonPositiveDimension { field: String, value: f64 },

    /// A numeric field was NaN or infinite.
    #[error("non-finite value: {field} = {value}")]
    NonFinite { field: String, value: f64 },

    /// Generic precondition violation.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A metric whose denominator is empty or zero.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Exhaustive enumeration refused because the subset count is too large.
    #[error(
        "exhaustive search refused: C({m}, {k}) = {combinations} subsets exceeds budget {budget}"
    )]
    BudgetExceeded {
        m: usize,
        k: usize,
        combinations: u128,
        budget: u128,
    },

    /// A required CSV column is absent from the header row.
    #[error("{file}: missing column '{column}'")]
    MissingColumn { file: String, column: String },

    /// A malformed record in an input file.
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },

    /// Underlying I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
