use std::io;

use crate::poisson::SolverReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("query triangle has no face view vertex")]
    NoView,

    #[error("solver did not converge after {} iterations (residual {:.3e})", .0.iterations, .0.residual)]
    Convergence(SolverReport),

    #[error("protocol error: {0}")]
    Protocol(#[from] ProtocolError),

    #[error("generator peer failed: {0}")]
    Peer(String),

    #[error("{stage} failed: {source}")]
    Pipeline {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Failures in the generator wire format. These never carry a partial raster.
#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported protocol version {0}")]
    Version(u8),
    #[error("unknown role byte {0:#04x}")]
    Role(u8),
    #[error("frame truncated: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("frame dimensions {height}x{width} rejected")]
    Dimensions { height: u32, width: u32 },
    #[error("invalid payload: {0}")]
    Payload(String),
    #[error("response does not match request: {0}")]
    Mismatch(String),
    #[error("timed out waiting for generator response")]
    Timeout,
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn at_stage(self, stage: impl Into<String>) -> Self {
        Error::Pipeline {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error beneath any pipeline-stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Pipeline { source, .. } => source.root(),
            other => other,
        }
    }
}
