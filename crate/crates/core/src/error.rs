use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the dense kernels in [`crate::linalg`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },
    #[error("matrix is not positive semi-definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix is singular within tolerance")]
    Singular,
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("training diverged at iteration {iteration}: {what}")]
    Divergence { iteration: usize, what: String },
    #[error("invalid state: {0}")]
    State(String),
    #[error("io error on {path}: {source}")]
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
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
