use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}, line {line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Validation(String),

    #[error("frame {index} missing (looked for {path})")]
    MissingFrame { index: usize, path: PathBuf },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("landmark {index} at ({x}, {y}) lies outside a {width}x{height} frame")]
    OutOfBounds {
        index: usize,
        x: i64,
        y: i64,
        width: u32,
        height: u32,
    },

    #[error("region {region} collapses to {width}x{height} px")]
    DegenerateRoi {
        region: String,
        width: u32,
        height: u32,
    },

    #[error("input {width}x{height}x{frames} is too small (need at least 3 in every dimension)")]
    TooSmall { width: u32, height: u32, frames: usize },

    #[error("class {class} has {count} samples, at least {required} needed")]
    ClassTooSmall {
        class: String,
        count: usize,
        required: usize,
    },

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("empty input")]
    EmptyInput,

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("json {origin}: {source}")]
    Json {
        origin: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(origin: impl std::fmt::Display, source: serde_json::Error) -> Self {
        Error::Json {
            origin: origin.to_string(),
            source,
        }
    }

    /// Stable, machine-parseable category name used by the CLI error line.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::MissingFrame { .. } => "missing-frame",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::OutOfBounds { .. } => "out-of-bounds",
            Error::DegenerateRoi { .. } => "degenerate-roi",
            Error::TooSmall { .. } => "too-small",
            Error::ClassTooSmall { .. } => "class-too-small",
            Error::DegenerateData(_) => "degenerate-data",
            Error::EmptyInput => "empty-input",
            Error::Image { .. } => "image",
            Error::Json { .. } => "json",
            Error::Usage(_) => "usage",
        }
    }
}
