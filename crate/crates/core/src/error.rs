use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("truncation unreliable: {0}")]
    Truncation(String),

    #[error("map is not symplectic (residual {0:.3e})")]
    NotSymplectic(f64),

    #[error("missing measurement for entry ({0}, {1})")]
    MissingSetting(usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
