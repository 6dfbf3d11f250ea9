use thiserror::Error;

/// Errors reported by the tree, its leaf stores and the suffix index.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("buffer is full (capacity {capacity})")]
    Full { capacity: usize },
    #[error("buffer is empty")]
    Empty,
    #[error("rank {rank} out of bounds for length {len}")]
    RankOutOfBounds { rank: usize, len: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("key not found")]
    NotFound,
    #[error("duplicate key")]
    Duplicate,
    #[error("aggregates are not enabled on this tree")]
    AggregatesDisabled,
    #[error("bit stream truncated")]
    Truncated,
    #[error("key {key} does not fit in {width} bits")]
    KeyTooWide { key: u64, width: u32 },
    #[error("position {pos} outside text of length {len}")]
    PositionOutOfRange { pos: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
