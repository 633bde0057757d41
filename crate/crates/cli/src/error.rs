use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] wrisk_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },

    #[error("{} file(s) differ from the golden set: {}", files.len(), files.join(", "))]
    GoldenMismatch { files: Vec<String> },
}

impl CliError {
    /// 2 for bad input, 3 when the mathematics has no answer, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) | CliError::Usage(_) | CliError::Read { .. } => 2,
            CliError::Write { .. } | CliError::GoldenMismatch { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}
