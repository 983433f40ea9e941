use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CfmError {
    #[error(transparent)]
    Model(#[from] cfm_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("band {low}-{high} Hz does not fit below the Nyquist frequency {nyquist} Hz")]
    BandOutOfRange { low: f64, high: f64, nyquist: f64 },

    #[error("signal: {0}")]
    Signal(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CfmError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Model(_) => "model",
            Self::Io { .. } => "io",
            Self::Parse { .. } => "parse",
            Self::Format { .. } => "format",
            Self::BandOutOfRange { .. } | Self::Config(_) => "usage",
            Self::Signal(_) => "signal",
            Self::Json(_) => "json",
        }
    }

    /// Exit status for the command line: 2 for usage problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::BandOutOfRange { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CfmError>;
