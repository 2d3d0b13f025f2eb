use thiserror::Error;

/// Errors raised by the toolkit.
///
/// The variants map onto the command-line exit statuses: validation-style
/// failures exit with 2, capacity failures with 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("capacity exceeded: {requested} qubits requested, limit is {limit}")]
    Capacity { requested: usize, limit: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("operator is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("operator norm {0} exceeds 1")]
    Norm(f64),

    #[error("infeasible request: {reason} (would need {required_samples} samples)")]
    Infeasible {
        reason: String,
        required_samples: u128,
    },

    #[error("invalid local inversion: residual {0:e}")]
    InvalidInversion(f64),

    #[error("learner failure: {0}")]
    Learner(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
