//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The HMM assigns zero likelihood to an observation.
    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Target coincides with a transmitter or receiver.
    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    /// A matrix that must be invertible or positive definite is not.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::NumericalFailure(msg.into())
    }

    /// Process exit code used by the CLI: 2 for configuration problems,
    /// 3 for numerical failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) => 2,
            Error::NumericalFailure(_)
            | Error::DegenerateModel(_)
            | Error::SingularGeometry(_)
            | Error::InsufficientData(_) => 3,
            Error::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
