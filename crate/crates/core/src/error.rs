use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("video shorter than one analysis window ({total} frames < {window})")]
    VideoTooShort { total: usize, window: usize },

    #[error("trajectory too short to smooth ({valid} valid frames)")]
    TrajectoryTooShort { valid: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("band ({low} Hz, {high} Hz) must satisfy 0 < low < high < {nyquist} Hz")]
    BandOutOfRange { low: f64, high: f64, nyquist: f64 },

    #[error("designed filter is unstable (pole radius {radius})")]
    UnstableFilter { radius: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("crop of {crop} px does not fit in a {width}x{height} frame")]
    CropTooLarge { crop: usize, width: usize, height: usize },

    #[error("trajectory point {index} at ({x}, {y}) leaves the renderable area")]
    OutOfBounds { index: usize, x: f64, y: f64 },

    #[error("{path}: line {line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("{path}: non-uniform sampling ({deviation:.3}% of the mean interval)")]
    NonUniformSampling { path: PathBuf, deviation: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// True for errors that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
