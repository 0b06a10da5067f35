use std::path::PathBuf;

use eahm_core::EahmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read scenario {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid scenario {path}:\n{message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid scenario: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] EahmError),

    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

impl CliError {
    /// 1 for bad input or I/O, 2 when the numerics could not produce a verdict.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_numeric() => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
