use thiserror::Error;

/// Errors raised by the toolkit. `Structure` and `Domain` indicate a violated
/// module precondition (bad input); the remaining variants indicate that a
/// computation could not reach its advertised accuracy.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structure(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole error: {0}")]
    Pole(String),
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("oracle failure: {0}")]
    OracleFailure(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True when the error names a violated precondition rather than an
    /// internal numerical failure. CLI maps these to exit code 2.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::Structure(_) | Error::Domain(_) | Error::Pole(_) | Error::Format(_)
        )
    }
}
