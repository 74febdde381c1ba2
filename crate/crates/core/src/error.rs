use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("too many failed fits: {failed} of {total}")]
    FailureRate { failed: usize, total: usize },
    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

impl Error {
    /// Process exit status for the command-line tool: 2 for bad input,
    /// 3 for estimation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Fit(_) | Error::FailureRate { .. } => 3,
            Error::Domain(_) | Error::Dimension(_) | Error::RankDeficient { .. } | Error::Input(_) => 2,
        }
    }
}
