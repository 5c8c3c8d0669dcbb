use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// One or more named properties failed.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("numeric failure: {0}")]
    Numeric(#[from] zeipel::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) | CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numeric(zeipel::Error::Usage(_)) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

/// Errors raised while checking inputs are configuration problems, not
/// numeric ones.
pub fn input<T>(r: zeipel::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(e.to_string()))
}
