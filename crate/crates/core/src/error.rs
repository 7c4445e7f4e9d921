use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the tracking toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported or malformed image {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("no frames found in {0}")]
    NoFrames(PathBuf),

    #[error("frame {index} ({path}) is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    MixedDimensions {
        index: usize,
        path: PathBuf,
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },

    #[error("ground truth line {line}: {reason}")]
    GroundTruth { line: usize, reason: String },

    #[error("box {0} does not intersect the image")]
    BoxOutsideImage(String),

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: String,
        left: usize,
        right: usize,
    },

    #[error("invalid synthetic sequence spec: {field}: {reason}")]
    Synth { field: String, reason: String },

    #[error("malformed record: {0}")]
    Record(String),

    #[error("frame {frame}: {stage} failed: {source}")]
    Frame {
        frame: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn at_frame(self, frame: usize, stage: &'static str) -> Self {
        Error::Frame {
            frame,
            stage,
            source: Box::new(self),
        }
    }
}
