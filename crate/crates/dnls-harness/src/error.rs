use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("numerical failure: {0}")]
    Numerical(#[from] dnls_core::Error),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed run data in {}: {msg}", path.display())]
    Data { path: PathBuf, msg: String },
}

impl HarnessError {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        HarnessError::Config { key: key.into(), msg: msg.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub fn data(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        HarnessError::Data { path: path.into(), msg: msg.into() }
    }

    /// Process exit code of the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io { .. } | HarnessError::Data { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
