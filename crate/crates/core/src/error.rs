use thiserror::Error;

/// Errors surfaced by the engine, shaping and learning layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its invariant. `key` names the offending
    /// key using its dotted config path.
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    /// An operation was called in a state that does not permit it.
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed numeric input (non-finite features, non-stochastic rows, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A serialized artifact could not be parsed.
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
