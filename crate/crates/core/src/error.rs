use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are coarse on purpose: the CLI reports [`Error::name`] as a
/// machine-readable tag next to the human message.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {left} vs {right} spins")]
    DimensionMismatch { left: usize, right: usize },

    #[error(
        "no support point of the n={n} law falls inside the window |sqrt(n)(xbar - {m})| <= {k}"
    )]
    EmptyWindow { n: usize, m: f64, k: f64 },

    #[error("theta slice at m={m} has {found} member(s), need at least 2")]
    NotEnoughMembers { m: f64, found: usize },

    #[error("root bracket invalid: {0}")]
    Convergence(String),

    #[error("malformed sample file, line {line}: {reason}")]
    SampleFormat { line: usize, reason: String },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyWindow { .. } => "EmptyWindow",
            Error::NotEnoughMembers { .. } => "NotEnoughMembers",
            Error::Convergence(_) => "ConvergenceFailure",
            Error::SampleFormat { .. } => "SampleFormat",
            Error::Io(_) => "IoError",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

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

pub type Result<T> = std::result::Result<T, Error>;
