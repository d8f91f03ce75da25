use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Shapes or axes do not fit together.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Parameters outside the allowed domain.
    #[error("validation error: {0}")]
    Validation(String),

    /// The requested computation exceeds a configured cap.
    #[error("capacity error: {what} needs {count}, cap is {cap}")]
    Capacity { what: String, count: String, cap: String },

    /// A theorem side condition does not hold, so no bound is produced.
    #[error("condition violated: {0}")]
    ConditionViolated(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// An internal exactness check failed. Always a bug.
    #[error("internal check failed: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn capacity(what: impl Into<String>, count: impl ToString, cap: impl ToString) -> Self {
        Error::Capacity { what: what.into(), count: count.to_string(), cap: cap.to_string() }
    }
}
