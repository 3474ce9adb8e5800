use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("unsupported model shape: {0}")]
    UnsupportedShape(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] srbm_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 1 usage, 2 data or format, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use srbm_core::Error as Core;
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. } | Error::Format { .. } | Error::UnsupportedShape(_) => 2,
            Error::Model(core) => match core {
                Core::InvalidConfig(_) | Core::InvalidShape(_) | Core::BudgetExceeded { .. } => 1,
                Core::NonFinite { .. } => 3,
                Core::Dimension { .. } | Core::Empty(_) | Core::InvalidData(_) | Core::InsufficientExamples { .. } => 2,
            },
        }
    }
}
