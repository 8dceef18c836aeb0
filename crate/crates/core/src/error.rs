use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: invalid JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("git {args}: {message}")]
    Git { args: String, message: String },

    #[error("{}: repository has no commits", path.display())]
    EmptyRepository { path: PathBuf },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("inconsistent input: {0}")]
    Consistency(String),

    #[error("{}: output directory is not empty", path.display())]
    OutputNotEmpty { path: PathBuf },

    #[error("trend undefined: {0}")]
    UndefinedTrend(String),

    #[error("classifier backend: {0}")]
    Backend(String),

    #[error("score: {0}")]
    Score(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
