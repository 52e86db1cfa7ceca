use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the registration library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("singular system during {context} (residual norm {residual_norm:e})")]
    Singular {
        context: &'static str,
        residual_norm: f64,
    },

    #[error("Newton solver did not converge after {iterations} iterations (residual norm {residual_norm:e})")]
    NewtonDiverged { iterations: usize, residual_norm: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("inconsistent input: {0}")]
    Consistency(String),

    #[error("direct solve failed at optimizer evaluation {evaluation}: {source}")]
    Iterate {
        evaluation: usize,
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

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for failures of the numerical solvers (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::Singular { .. } | Error::NewtonDiverged { .. } | Error::Degenerate(_) => true,
            Error::Iterate { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
