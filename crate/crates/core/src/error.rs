use thiserror::Error;

/// Errors raised anywhere in the solver, simulator or verification harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid problem data: {0}")]
    InvalidData(String),

    #[error("numerical failure in {stage}: {detail}")]
    Numerical { stage: &'static str, detail: String },

    #[error("query outside the grid domain: {0}")]
    OutOfDomain(String),

    #[error("malformed file at line {line}: {detail}")]
    Format { line: usize, detail: String },

    #[error("sign-pattern iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numerical(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            stage,
            detail: detail.into(),
        }
    }
}
