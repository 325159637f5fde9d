use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sentence {sent_id}: {reason}")]
    InvalidTree { sent_id: String, reason: String },

    #[error("index {index} out of range (sentence length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("sentence {sent_id}: alignment entry ({src}, {tgt}) outside sentence lengths ({src_len}, {tgt_len})")]
    AlignmentOutOfRange {
        sent_id: String,
        src: usize,
        tgt: usize,
        src_len: usize,
        tgt_len: usize,
    },

    #[error("alignment score {0} outside [0, 1]")]
    InvalidScore(f64),

    #[error("sentence {sent_id}: token {side} {index} is not housed in the forest")]
    Unhoused {
        sent_id: String,
        side: &'static str,
        index: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
