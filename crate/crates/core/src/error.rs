use std::io;

use thiserror::Error;

use crate::ranking::DocId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate document id {0}")]
    DuplicateDocId(DocId),

    #[error("posting index {index} outside the range {start}..{end} of term {term_id}")]
    PostingOutOfRange {
        term_id: usize,
        index: usize,
        start: usize,
        end: usize,
    },

    #[error("term id {0} is not in the vocabulary")]
    UnknownTerm(usize),

    #[error("requested k={k} exceeds the selection buffer capacity {capacity}")]
    BufferTooSmall { k: usize, capacity: usize },

    #[error("k must be at least 1")]
    ZeroK,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index holds {found} payloads but {expected} scoring was requested")]
    PayloadMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("record {0} referenced by a ranked list is missing from the record lookup")]
    MissingRecord(DocId),

    #[error("system `{0}` has no ranked list")]
    MissingSystem(String),

    #[error("{0}")]
    Degenerate(String),

    #[error("malformed input at byte {offset}: {reason}")]
    Malformed { offset: u64, reason: String },

    #[error("malformed input at line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
