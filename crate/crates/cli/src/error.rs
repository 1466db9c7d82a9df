use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Process exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("schema error in {path}: expected header `{expected}`, found `{found}`")]
    Schema {
        path: String,
        expected: String,
        found: String,
    },
    #[error("parse error in {path} at row {row}: {msg}")]
    Parse { path: String, row: u64, msg: String },
    #[error(transparent)]
    Model(#[from] moc_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Schema { .. } | CliError::Parse { .. } => EXIT_PARSE,
            CliError::Model(_) | CliError::Io { .. } => EXIT_RUNTIME,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
