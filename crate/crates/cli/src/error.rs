use std::path::{Path, PathBuf};

use qoc_core::QocError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    /// `field` is a dotted path into the config document.
    #[error("{field}: {message}")]
    Validation { field: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Solver(#[from] QocError),
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Wraps a core error raised while checking one config field.
    pub fn at(field: impl Into<String>, err: QocError) -> Self {
        let message = match err {
            QocError::InvalidArgument(m) => m,
            other => other.to_string(),
        };
        CliError::validation(field, message)
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } => 4,
            CliError::Io { .. } => 3,
            CliError::Solver(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
