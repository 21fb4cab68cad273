use std::path::PathBuf;

/// Error type shared by every module in the crate.
///
/// The variants map onto process exit codes in the CLI: domain and
/// validation problems exit 1, budget overruns exit 2, and
/// internal-consistency failures (two independent methods disagreeing)
/// exit 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("invalid partition: {0}")]
    Validation(String),

    #[error("search failure: {0}")]
    SearchFailure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget(_) => 2,
            Error::Consistency(_) | Error::SearchFailure(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
