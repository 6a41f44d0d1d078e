use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("{0} variables exceeds the limit of {max}", max = crate::MAX_VARS)]
    TooManyVariables(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cache header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("malformed cache: {0}")]
    Cache(String),

    #[error("incomplete shard set: {0}")]
    IncompleteShards(String),

    #[error("resource limit: {0}")]
    Resource(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// A vector of `len` copies of `value`, or a resource error if it cannot be allocated.
pub(crate) fn try_filled<T: Clone>(len: usize, value: T, what: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    out.try_reserve_exact(len)
        .map_err(|_| Error::Resource(format!("cannot allocate {len} {what}")))?;
    out.resize(len, value);
    Ok(out)
}
