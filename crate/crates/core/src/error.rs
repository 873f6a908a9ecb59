use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("stalled transport: drive current {current_density:e} A/m^2 is below depinning density {depin_density:e} A/m^2")]
    StalledTransport {
        current_density: f64,
        depin_density: f64,
    },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{path}: wrong magic 0x{found:08x} (expected 0x{expected:08x}) at byte 0")]
    WrongMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated at byte {offset} (needed {needed} bytes)")]
    Truncated {
        path: PathBuf,
        offset: usize,
        needed: usize,
    },

    #[error("{path}: bad dimensions at byte {offset}: {reason}")]
    BadDimensions {
        path: PathBuf,
        offset: usize,
        reason: String,
    },

    #[error("{path}: trailing data at byte {offset}")]
    TrailingData { path: PathBuf, offset: usize },

    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("{path}: label value {value} out of range at byte {offset}")]
    BadLabel {
        path: PathBuf,
        offset: usize,
        value: u8,
    },

    #[error("config error for key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("checkpoint: unsupported version `{0}`")]
    CheckpointVersion(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("scenario line {line}: {reason}")]
    Scenario { line: usize, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
