use thiserror::Error;

/// Crate-wide error type.
///
/// The variants mirror how failures are reported at the CLI boundary:
/// configuration and input errors map to exit code 2, data errors
/// (parse/format/io) map to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    /// A run or circuit configuration is inconsistent or out of range.
    #[error("configuration error: {0}")]
    Config(String),

    /// A function argument violates its contract (bad index, bad shape, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A data file contains an unreadable record.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A data file does not match its expected layout.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
