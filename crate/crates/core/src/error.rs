use thiserror::Error;

/// Exit-code class of an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numeric,
    Resource,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 1,
            ErrorClass::Numeric => 2,
            ErrorClass::Resource => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum ErgoError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("series diverges: {0}")]
    Divergence(String),
    #[error("series not converged after {terms} terms")]
    NonConvergence { terms: usize },
    #[error("tolerance not met: value {value:e}, error estimate {error:e}")]
    Tolerance { value: f64, error: f64 },
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ErgoError {
    pub fn class(&self) -> ErrorClass {
        match self {
            ErgoError::Domain(_) | ErgoError::Precondition(_) | ErgoError::Config { .. } => {
                ErrorClass::Config
            }
            ErgoError::Divergence(_)
            | ErgoError::NonConvergence { .. }
            | ErgoError::Tolerance { .. }
            | ErgoError::Inconclusive(_)
            | ErgoError::Solver(_) => ErrorClass::Numeric,
            ErgoError::Resource(_) | ErgoError::Io(_) => ErrorClass::Resource,
        }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        ErgoError::Domain(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        ErgoError::Precondition(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, ErgoError>;
