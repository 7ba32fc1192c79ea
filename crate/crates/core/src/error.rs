use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation, reconstruction and I/O layers.
#[derive(Debug, Error)]
pub enum IsmError {
    #[error("invalid optical configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid scan grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("detector position ({x:.3}, {y:.3}) nm lies outside the grid support")]
    OutsideGrid { x: f64, y: f64 },

    #[error("phantom is empty: {0}")]
    EmptyPhantom(String),

    #[error("negative value {value} at flat index {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("PSF stack is not normalized (total = {total})")]
    UnnormalizedStack { total: f64 },

    #[error("empty channel {0}")]
    EmptyChannel(usize),

    #[error("dataset has no central channel")]
    NoCentralChannel,

    #[error(
        "model value {model} is not positive at a pixel with {counts} counts (channel {channel})"
    )]
    NonPositiveModel {
        channel: usize,
        model: f64,
        counts: f64,
    },

    #[error("insufficient reliable channels along {axis} axis")]
    InsufficientChannels { axis: &'static str },

    #[error("Gaussian fit failed: {reason} (residual sum of squares {rss:.3e}, {iterations} iterations)")]
    FitFailed {
        reason: String,
        rss: f64,
        iterations: usize,
    },

    #[error("{0}")]
    MissingInput(String),

    #[error("bad magic bytes")]
    BadMagic,

    #[error("unsupported version {0}")]
    UnsupportedVersion(String),

    #[error("payload length mismatch: expected {expected} bytes, found {found}")]
    PayloadLength { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported dtype {0}")]
    UnsupportedDtype(String),

    #[error("malformed header: {0}")]
    Header(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Import { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, IsmError>;

impl IsmError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IsmError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn import(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        IsmError::Import {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
