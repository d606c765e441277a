use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("eigen-solve failed for diagonal offset {offset}: {reason}")]
    EigenSolve { offset: usize, reason: String },

    #[error(
        "fixed-point solve did not converge{} after {iterations} iterations (last update {residual:.3e}); reduce the step size",
        step.map(|s| format!(" at step {s}")).unwrap_or_default()
    )]
    StepFailure {
        step: Option<usize>,
        iterations: usize,
        residual: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }

    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::Precondition(_)
            | Error::Parse { .. } => 2,
            Error::EigenSolve { .. } | Error::StepFailure { .. } => 3,
            Error::Io { .. } => 4,
        }
    }
}
