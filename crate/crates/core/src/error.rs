use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The data carries no spread (all values equal, or too few values).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Two Gumbel laws with different scales were combined where equal scales are required.
    #[error("scale mismatch: {left} vs {right}")]
    ScaleMismatch { left: f64, right: f64 },

    /// An iterative solver ran out of budget.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    /// Numerical failure with diagnostics (quadrature non-convergence, NaN, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A routine was called outside the conditions it needs.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Training diverged; carries the last epoch that produced finite values.
    #[error("training diverged at epoch {epoch} (last good epoch {last_good:?})")]
    Training { epoch: usize, last_good: Option<usize> },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
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
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
