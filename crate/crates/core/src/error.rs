use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimensions {dims:?} do not match data length {len}")]
    GridShape { dims: [usize; 3], len: usize },
    #[error("grid value at index {index} is not finite")]
    NonFinite { index: usize },
    #[error("expected 1 or 3 channels, got {0}")]
    InvalidChannels(usize),
    #[error("subsampling factor must be positive")]
    InvalidFactor,
    #[error("layer index {index} out of range 0..={max}")]
    LayerIndex { index: usize, max: usize },
    #[error("invalid shift set: {0}")]
    InvalidShiftSet(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("stream truncated while reading {0}")]
    Truncated(&'static str),
    #[error("layer {layer}: expects {expected} input channels, previous layer produces {found}")]
    ChannelChain { layer: usize, expected: usize, found: usize },
    #[error("layer {layer}: {reason}")]
    InvalidLayer { layer: usize, reason: String },

    #[error("shape error: {0}")]
    Shape(String),
    #[error("matching value domain error: activation {0} is negative (pre-ReLU value leaked in?)")]
    NegativeActivation(f32),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("mismatched activation stacks: {0}")]
    MismatchedStacks(String),
    #[error("path count exceeds {limit} (overflow guard)")]
    PathOverflow { limit: u64 },

    #[error("evaluation has no valid ground-truth pixels")]
    EmptyEvaluation,
    #[error("image format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
