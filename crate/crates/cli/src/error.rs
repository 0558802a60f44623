use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Rejected before any computation; exit code 2.
    #[error("invalid config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Compute {
        context: &'static str,
        #[source]
        source: splab_core::Error,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Attaches a module name to core errors.
pub(crate) trait Context<T> {
    fn ctx(self, context: &'static str) -> Result<T, CliError>;
}

impl<T> Context<T> for splab_core::Result<T> {
    fn ctx(self, context: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Compute { context, source })
    }
}
