use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate projection axis")]
    DegenerateProjection,

    #[error("degenerate torque distribution")]
    DegenerateTorque,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unknown environment id `{0}`")]
    UnknownEnvironment(String),

    #[error("image resolution {got_w}x{got_h} does not match model input {expected}x{expected}")]
    Resolution {
        expected: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("training diverged at iteration {iteration}: loss = {loss}")]
    Diverged { iteration: usize, loss: f64 },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("png encoding: {0}")]
    PngEncode(#[from] png::EncodingError),

    #[error("png decoding: {0}")]
    PngDecode(#[from] png::DecodingError),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
