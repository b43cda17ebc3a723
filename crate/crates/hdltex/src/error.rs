use std::io;
use std::path::{Path, PathBuf};

use crate::container::ContainerError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Data {
        path: PathBuf,
        #[source]
        source: hdltex_core::Error,
    },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error(transparent)]
    Core(#[from] hdltex_core::Error),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    /// Process exit status: 1 usage, 2 bad data, 3 numeric divergence.
    pub fn exit_code(&self) -> i32 {
        let core = match self {
            Error::Usage(_) => return 1,
            Error::Core(e) | Error::Data { source: e, .. } => e,
            _ => return 2,
        };
        match core {
            hdltex_core::Error::Diverged { .. } | hdltex_core::Error::NonFiniteGradient => 3,
            _ => 2,
        }
    }
}
