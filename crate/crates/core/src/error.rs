use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere between reading a file and emitting metrics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid resolution {width}x{height}: both dimensions must be multiples of 8 and at least 16")]
    ResolutionInvalid { width: u32, height: u32 },

    #[error("cannot read {}: {source}", path.display())]
    FileUnreadable {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("frame {index} truncated: got {got} of {expected} luma bytes")]
    TruncatedFrame {
        index: u64,
        got: usize,
        expected: usize,
    },

    #[error("malformed y4m header: {0}")]
    HeaderMalformed(String),

    #[error("unsupported y4m colorspace {0:?}: only 8-bit planar input is accepted")]
    UnsupportedColorspace(String),

    #[error("resolution mismatch: expected {expected_width}x{expected_height}, got {width}x{height}")]
    ResolutionMismatch {
        expected_width: u32,
        expected_height: u32,
        width: u32,
        height: u32,
    },

    #[error("word overrun: frame carries only {limit} payload words")]
    WordOverrun { limit: u32 },

    #[error("frame incomplete: consumed {consumed} of {expected} payload words")]
    FrameIncomplete { expected: u32, consumed: u32 },

    #[error("too few shifted blocks ({blocks}) for the three-darkest/three-brightest exposure")]
    TooFewBlocks { blocks: u32 },

    #[error("lane failed on frame {frame_index}: {source}")]
    Lane {
        frame_index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
