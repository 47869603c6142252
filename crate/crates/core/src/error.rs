use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Trace or figure file did not parse. `line` is 1-based.
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("no frames")]
    NoFrames,
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid figure: {0}")]
    InvalidFigure(String),
    #[error("invalid window {window:?}: {msg}")]
    Window { window: Range<usize>, msg: String },
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch at {layer}: expected {expected}, got {got}")]
    Shape {
        layer: String,
        expected: String,
        got: String,
    },
    #[error("receiver windows not synchronized: {0:?} vs {1:?}")]
    Unsynchronized(Range<usize>, Range<usize>),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("scenario file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_window(window: &Range<usize>, len: usize, min_len: usize) -> Result<()> {
    if window.start >= window.end {
        return Err(Error::Window {
            window: window.clone(),
            msg: "empty".into(),
        });
    }
    if window.end > len {
        return Err(Error::Window {
            window: window.clone(),
            msg: format!("exceeds length {len}"),
        });
    }
    if window.len() < min_len {
        return Err(Error::Window {
            window: window.clone(),
            msg: format!("needs at least {min_len} frames"),
        });
    }
    Ok(())
}
