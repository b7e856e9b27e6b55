use std::io;
use std::path::Path;

use serde_json::json;
use thiserror::Error;

/// Failure of one invocation, mapped to the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error("{0}")]
    Remote(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Remote(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Io { .. } => "io",
            CliError::Remote(_) => "remote",
        }
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({"status": "error", "kind": self.kind(), "code": self.code(), "message": self.to_string()})
    }

    /// Unparseable input is a schema violation, everything else is I/O.
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        let context = context.into();
        if source.kind() == io::ErrorKind::InvalidData {
            CliError::Validation(format!("{context}: {source}"))
        } else {
            CliError::Io { context, source }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{what} not found: {}", path.display())))
    }
}

pub fn require_dir(path: &Path, what: &str) -> CliResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{what} not found: {}", path.display())))
    }
}
