use std::path::PathBuf;

use delaydisp_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl SimError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 3,
            SimError::Core(CoreError::Config(_))
            | SimError::Core(CoreError::HistoryRange { .. })
            | SimError::Core(CoreError::TooFewSamples { .. })
            | SimError::Core(CoreError::DimensionMismatch { .. }) => 3,
            SimError::Io { .. } | SimError::Format { .. } => 4,
            SimError::Core(_) => 1,
        }
    }
}

pub type SimResult<T> = Result<T, SimError>;
