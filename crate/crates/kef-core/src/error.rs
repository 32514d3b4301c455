use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum KefError {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A stated precondition of an operation does not hold.
    #[error("precondition not met: {0}")]
    Precondition(String),

    /// Numerical routine failed to reach its target accuracy.
    #[error("numeric failure: {msg} (achieved {achieved:.3e}, required {required:.3e})")]
    Numeric {
        msg: String,
        achieved: f64,
        required: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KefError>;

impl KefError {
    pub fn domain(msg: impl Into<String>) -> Self {
        KefError::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        KefError::Config(msg.into())
    }
    pub fn precondition(msg: impl Into<String>) -> Self {
        KefError::Precondition(msg.into())
    }
}
