use thiserror::Error;

/// Errors produced by the thermal Wigner library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("every trajectory was discarded at theta = {theta} (discarded fraction {discarded_fraction})")]
    AllTrajectoriesDiscarded { theta: f64, discarded_fraction: f64 },

    #[error("Newton-Raphson failed after {iterations} iterations (residual {residual:e})")]
    NewtonFailed { iterations: usize, residual: f64 },

    #[error("trajectory crossed a caustic or diverged before s = {s}")]
    UnreachableCentre { s: f64 },

    #[error("eigensolver did not converge: {0}")]
    EigensolverFailed(String),

    #[error("Metropolis chain rejected every proposal in a window of {window} steps")]
    ZeroAcceptance { window: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
