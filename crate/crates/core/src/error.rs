use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("phase is undefined for a zero-magnitude element")]
    UndefinedPhase,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("design infeasible: {0}")]
    DesignInfeasible(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
