use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Iteration budget exhausted; `best` is the best objective value reached.
    #[error("{what} did not converge within {iterations} iterations (best value {best:e})")]
    Convergence {
        what: String,
        iterations: usize,
        best: f64,
    },

    #[error("certificate infeasible: {0}")]
    Infeasible(String),

    #[error("unknown name `{0}`")]
    Lookup(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("malformed document: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
