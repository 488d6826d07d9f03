use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A tensor or batch had a shape the receiving operation cannot accept.
    #[error("shape error in {context}: {message}")]
    Shape { context: String, message: String },

    /// A configuration value is out of range or inconsistent with another.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data is malformed (bad labels, empty sets, inconsistent dims).
    #[error("invalid input: {0}")]
    Input(String),

    /// A metric has no defined value for the given inputs.
    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    /// A byte stream did not match the expected serialization format.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// An internal invariant was violated; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn shape(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Shape {
            context: context.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
