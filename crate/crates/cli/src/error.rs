use std::path::PathBuf;

/// Every CLI failure maps to exit code 1; verification aborts are not errors.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    /// A field failed validation; `field` names it for the diagnostic.
    #[error("invalid `{field}`: {message}")]
    Field {
        field: &'static str,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] qsum_core::Error),
}

impl CliError {
    pub fn field(field: &'static str, message: impl Into<String>) -> Self {
        Self::Field {
            field,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn read(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write(path: &std::path::Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
