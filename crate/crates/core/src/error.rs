use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bin {index} ({frequency:.3} Hz) is infeasible: {reason}")]
    InfeasibleBin {
        index: usize,
        frequency: f64,
        reason: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("lag {lag} outside 1..={capacity}")]
    LagOutOfRange { lag: usize, capacity: usize },

    #[error("wav `{chunk}` chunk: {reason}")]
    Wav { chunk: String, reason: String },

    #[error("sample rate mismatch: stream is {stream} Hz, bank is planned for {config} Hz")]
    SampleRateMismatch { stream: u32, config: u32 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn wav(chunk: &str, reason: impl Into<String>) -> Self {
        Error::Wav {
            chunk: chunk.to_string(),
            reason: reason.into(),
        }
    }
}
