use std::io;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Variants map one-to-one onto the error categories reported by the CLI,
/// see [`Error::category`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("infeasible sampling: {0}")]
    InfeasibleMask(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("file format error: {0}")]
    Format(String),

    #[error("missing calibration statistics for {0} initialization")]
    MissingCalibration(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("denoiser protocol error: {0}")]
    Protocol(String),

    #[error("denoiser timed out after {0} ms")]
    Timeout(u64),

    #[error("denoiser reported shape error")]
    RemoteShape,

    #[error("denoiser reported internal error")]
    RemoteInternal,

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Short machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) | Error::ShapeMismatch(_) | Error::NonFinite(_) => "input",
            Error::InfeasibleMask(_) => "input",
            Error::Config(_) => "config",
            Error::Format(_) | Error::Io(_) => "io",
            Error::MissingCalibration(_) | Error::Numerical(_) => "solver",
            Error::Iteration { source, .. } => source.category(),
            Error::Protocol(_) | Error::Timeout(_) | Error::RemoteShape | Error::RemoteInternal => "protocol",
            Error::Verification(_) => "verification",
        }
    }

    /// Wraps an error with the solver iteration it happened in.
    pub fn at_iteration(self, iteration: usize) -> Error {
        match self {
            e @ Error::Iteration { .. } => e,
            e => Error::Iteration { iteration, source: Box::new(e) },
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Format(format!("csv: {other:?}")),
        }
    }
}
