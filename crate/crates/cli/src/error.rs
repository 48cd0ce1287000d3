use std::fmt;
use std::process::ExitCode;

use splitstate::Error;

#[derive(Debug)]
pub enum CliError {
    /// Malformed config: bad JSON, unknown or missing fields, invalid values.
    Schema(String),
    /// Well-formed job that cannot be carried out, e.g. too few detector sets.
    Infeasible(String),
    Io(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Schema(_) => ExitCode::from(2),
            CliError::Infeasible(_) => ExitCode::from(3),
            CliError::Io(_) | CliError::Other(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "invalid config: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) | Error::Validation(_) => CliError::Schema(e.to_string()),
            Error::SizeLimit(_)
            | Error::DesignInfeasible(_)
            | Error::Precondition(_)
            | Error::Degenerate(_)
            | Error::Unsupported(_)
            | Error::Factorization(_) => CliError::Infeasible(e.to_string()),
            Error::Io(m) => CliError::Io(m),
            Error::UndefinedPhase => CliError::Other(e.to_string()),
        }
    }
}
