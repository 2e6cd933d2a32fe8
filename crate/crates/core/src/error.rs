use thiserror::Error;

/// Errors raised by the toolkit. Non-convergence of an iterative solver is
/// not an error; it is reported through `SolverReport::converged`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("complex input not supported: {0}")]
    ComplexUnsupported(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used in trial records and CLI output.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Argument(_) => "Argument",
            Error::RankDeficient(_) => "RankDeficient",
            Error::SizeLimit(_) => "SizeLimit",
            Error::Infeasible(_) => "Infeasible",
            Error::ComplexUnsupported(_) => "ComplexUnsupported",
            Error::Parse { .. } => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
