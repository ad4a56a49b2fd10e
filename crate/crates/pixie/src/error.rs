use std::io;
use std::path::PathBuf;

use pixie_core::grid::GridError;
use pixie_core::kernels::KernelError;
use pixie_core::{CodecError, GraphError, MapError, SimError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    /// Syntax or schema error; serde_json's message carries line and column.
    #[error("{what}: {source}")]
    Json { what: String, source: serde_json::Error },

    #[error("{0}")]
    Format(String),

    #[error("invalid grid: {0}")]
    Grid(#[from] GridError),

    #[error("invalid task graph: {0}")]
    Graph(#[from] GraphError),

    #[error("mapping failed: {0}")]
    Map(#[from] MapError),

    #[error("bitstream: {0}")]
    Codec(#[from] CodecError),

    #[error("simulation: {0}")]
    Sim(#[from] SimError),

    #[error("{0}")]
    Kernel(#[from] KernelError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Error {
        Error::Io { path: path.into(), source }
    }

    pub fn json(what: impl Into<String>, source: serde_json::Error) -> Error {
        Error::Json { what: what.into(), source }
    }

    /// Process exit status: 3 for I/O failures, 2 for everything the
    /// toolchain rejects.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}
