use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Violation;
use crate::io::config::ConfigError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Model,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("distance {distance} m is below the reference distance {reference} m")]
    NearField { distance: f64, reference: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate material '{material}': {reason}")]
    DegenerateMaterial { material: String, reason: String },

    #[error("frequency {hz} Hz is outside the coverage [{lo}, {hi}] Hz of material '{material}'")]
    UnsupportedFrequency {
        material: String,
        hz: f64,
        lo: f64,
        hi: f64,
    },

    #[error("calibration fit failed: {0}")]
    Fit(String),

    #[error("integration grid: {0}")]
    Grid(String),

    #[error("stream separation failed: {0}")]
    Singular(String),

    #[error("condition number is undefined for the zero matrix")]
    UndefinedCondition,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid scene: {}", format_violations(.0))]
    InvalidScene(Vec<Violation>),

    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("preset: {0}")]
    Preset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {message}")]
    Format { context: String, message: String },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::Preset(_) | Error::InvalidScene(_) | Error::Grid(_) => ErrorCategory::Config,
            Error::Io { .. } | Error::Format { .. } => ErrorCategory::Io,
            _ => ErrorCategory::Model,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Format {
            context: context.into(),
            message: message.to_string(),
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
