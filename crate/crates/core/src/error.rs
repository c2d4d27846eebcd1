use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("moment of order {0} is not supported (maximum is 8)")]
    UnsupportedOrder(u32),

    #[error("non-finite value produced by trial {trial}")]
    NumericalFailure { trial: u64 },

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("width {width} at layer {layer} makes the cross term undefined (every K_l must be at least 2)")]
    DivisionByZeroGuard { layer: usize, width: usize },

    #[error("activation {0} is not supported here")]
    UnsupportedActivation(String),

    #[error("parameter budget is infeasible: {0}")]
    Infeasible(String),

    #[error("every candidate step size diverged")]
    NoViableStepSize,

    #[error("malformed IDX file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
