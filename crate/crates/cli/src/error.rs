use std::path::PathBuf;

use thiserror::Error;

/// Failures of the command-line driver.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("override '{text}': {message}")]
    Override { text: String, message: String },

    #[error("invalid setting {key}: {message}")]
    Invalid { key: &'static str, message: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] relboltz_core::Error),
}
