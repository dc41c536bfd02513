use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate world {world_id}: {reason}")]
    DegenerateWorld { world_id: usize, reason: String },

    #[error("world {world_id}: closure conflicts persisted after {attempts} attempts ({conflicts} conflicts on last attempt)")]
    ClosureConflict {
        world_id: usize,
        attempts: usize,
        conflicts: usize,
    },

    #[error("world {world_id}: could not sample a valid instance for descriptor pool {split} after {attempts} attempts")]
    SamplingExhausted {
        world_id: usize,
        split: String,
        attempts: usize,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfiguration(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn degenerate(world_id: usize, reason: impl Into<String>) -> Self {
        Error::DegenerateWorld {
            world_id,
            reason: reason.into(),
        }
    }
}
