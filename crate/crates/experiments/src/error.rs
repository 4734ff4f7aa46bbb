use std::path::Path;

use thiserror::Error;

pub type Result<T, E = ExperimentError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),
    #[error("invalid missing-data spec: {0}")]
    InvalidSpec(String),
    #[error("reference signal has zero norm")]
    ZeroSignal,
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: ggsp_core::Error,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl ExperimentError {
    /// Process exit status: 2 for configuration problems, 3 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::InvalidSpec(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        ExperimentError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

pub(crate) trait Context<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T> Context<T> for ggsp_core::Result<T> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|source| ExperimentError::Core {
            context: what.to_string(),
            source,
        })
    }
}
