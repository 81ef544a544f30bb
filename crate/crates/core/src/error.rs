use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The stream ended before the current block was complete.
    #[error(
        "input ended inside a block: {blocks_completed} block(s) completed, \
         {partial_symbols} symbol(s) read into the next"
    )]
    InsufficientInput {
        blocks_completed: u64,
        partial_symbols: u64,
    },

    #[error("no theoretical cell for n={n}, K={k}")]
    KeyMismatch { n: u64, k: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
