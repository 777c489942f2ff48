use std::path::PathBuf;

/// Errors produced anywhere in the search engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed audio container: {0}")]
    Format(String),

    #[error("unsupported audio encoding: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The bridge process could not be started or failed its handshake.
    #[error("bridge unavailable: {0}")]
    BridgeUnavailable(String),

    /// The bridge answered a request with an error, or the connection broke
    /// after a successful handshake.
    #[error("bridge error: {0}")]
    Bridge(String),

    /// A generator or verifier failed while producing candidate `index`.
    #[error("candidate {index} failed: {source}")]
    Candidate {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn at_candidate(self, index: usize) -> Self {
        match self {
            e @ Error::Candidate { .. } => e,
            e => Error::Candidate {
                index,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
