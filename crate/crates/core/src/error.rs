use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus has no tokens")]
    EmptyCorpus,

    #[error("invalid count matrix: {0}")]
    InvalidCounts(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("observation (doc {doc}, term {term}) has zero probability under every factor")]
    UnreachableObservation { doc: usize, term: usize },

    #[error("document {0} has zero probability mass under the model")]
    ZeroMassDocument(usize),

    #[error("query has no term known to the model")]
    UnmatchableQuery,

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("free energy undefined: positive posterior on a zero-probability factor")]
    UndefinedFreeEnergy,

    #[error("dense matrix of {cells} cells exceeds the limit of {limit}")]
    TooLarge { cells: usize, limit: usize },

    #[error("unsupported container: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for failures caused by numerically degenerate inputs rather than bad data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UnreachableObservation { .. }
                | Error::ZeroMassDocument(_)
                | Error::UndefinedFreeEnergy
                | Error::ZeroVector
        )
    }
}
