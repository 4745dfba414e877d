use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::BoundingBox;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("score {0} outside [0, 1]")]
    InvalidScore(f32),

    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("box {0} does not intersect the {1}x{2} frame")]
    EmptyIntersection(BoundingBox, usize, usize),

    #[error("frame {width}x{height} is too small for the filterbank (minimum 16x16)")]
    FrameTooSmall { width: usize, height: usize },

    #[error("channel index {index} out of range (bank has {len} channels)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch in {context}: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        context: String,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("unreadable image {path}: {reason}")]
    UnreadableImage { path: PathBuf, reason: String },

    #[error("no external score for frame {frame} box {bbox}")]
    MissingExternalScore { frame: u64, bbox: BoundingBox },

    #[error("video id mismatch: {0:?} vs {1:?}")]
    VideoIdMismatch(String, String),

    #[error("no frame available for index {0}")]
    MissingFrame(u64),

    #[error("invalid config `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("frame {frame}: {source}")]
    AtFrame {
        frame: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    pub fn at_frame(self, frame: u64) -> Self {
        match self {
            e @ Error::AtFrame { .. } => e,
            e => Error::AtFrame {
                frame,
                source: Box::new(e),
            },
        }
    }

    /// True for errors caused by bad user configuration rather than bad data.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidConfig { .. } => true,
            Error::AtFrame { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
