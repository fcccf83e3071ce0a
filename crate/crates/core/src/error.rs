use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure classes. Each maps onto one CLI exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    /// 1 for usage/parse problems, 2 for scenario problems, 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnknownUnit(_) | Error::Parse { .. } | Error::Usage(_) | Error::Io(_) => 1,
            Error::Validation(_) | Error::Regime(_) | Error::Domain(_) => 2,
            Error::Numerical(_) | Error::Internal(_) => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
