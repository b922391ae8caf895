use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("non-finite element at index {index}")]
    NonFinite { index: usize },

    #[error("unknown dtype code {0:#04x}")]
    UnknownDtype(u8),

    #[error("unsupported tensor rank {0} (only rank 2 is supported)")]
    BadRank(u8),

    #[error("unknown page kind {0}")]
    UnknownPageKind(u8),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("value range of a quantization group overflows f32")]
    RangeOverflow,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("code {code} out of range for {bits}-bit quantization")]
    CodeOutOfRange { code: u8, bits: u8 },

    #[error("malformed boost index: {non_sentinel} non-sentinel entries, expected {d_boost}")]
    MalformedSentinel { non_sentinel: usize, d_boost: usize },

    #[error("cache invariant violated: {0}")]
    Invariant(String),

    #[error("attention over an empty cache")]
    EmptyCache,

    #[error("prefill requires an empty cache ({0} tokens present)")]
    NonEmptyState(usize),
}
