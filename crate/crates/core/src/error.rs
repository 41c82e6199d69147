//! Error type shared by all engine modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown website: {0}")]
    UnknownWebsite(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("topic index {topic} out of range for {k} topics")]
    TopicOutOfRange { topic: usize, k: usize },

    #[error("no similar items: price list is empty")]
    NoSimilarItems,

    #[error("undefined NDPM: reference has no strict preference pairs")]
    UndefinedNdpm,

    #[error("ranking and reference cover different website sets: {0}")]
    WebsiteSetMismatch(String),

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
