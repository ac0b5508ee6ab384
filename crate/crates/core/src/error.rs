use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Bad arguments: wrong order, dimension mismatch, nonpositive tolerance.
    #[error("usage error: {0}")]
    Usage(String),

    /// An operation's stated precondition does not hold for the given data.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Newton-type iteration failed. `history` holds the residual sup-norms seen so far.
    /// Anti-integrable solves attach the report evaluated on the last iterate.
    #[error("convergence error: {message} (last residual {last_residual:e})")]
    Convergence {
        message: String,
        last_residual: f64,
        history: Vec<f64>,
        partial: Option<Box<crate::equilibrium::AiSolveReport>>,
    },

    #[error("capacity error: {what} exceeds limit {limit}")]
    Capacity { what: String, limit: usize },

    /// Formula evaluated outside the region where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate hull: {0}")]
    Degeneracy(String),
}

impl Error {
    /// Stable machine-readable code used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Precondition(_) => "precondition",
            Error::Convergence { .. } => "convergence",
            Error::Capacity { .. } => "capacity",
            Error::Domain(_) => "domain",
            Error::Degeneracy(_) => "degeneracy",
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn convergence(msg: impl Into<String>, history: Vec<f64>) -> Self {
        Error::Convergence {
            message: msg.into(),
            last_residual: history.last().copied().unwrap_or(f64::NAN),
            history,
            partial: None,
        }
    }
}
