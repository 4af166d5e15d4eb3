use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Wraps an error raised while processing a 1-based input line.
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid span [{start}, {end}) for text of {len} chars")]
    InvalidSpan { start: usize, end: usize, len: usize },

    #[error("invalid month {0} (expected 1-12)")]
    InvalidMonth(u32),

    #[error("bad date {0:?} (expected YYYY-MM)")]
    BadDate(String),

    #[error("invalid label {0:?} (expected 0 or 1)")]
    InvalidLabel(String),

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("duplicate label id {0:?}")]
    DuplicateLabel(String),

    #[error("invalid route: {0}")]
    InvalidRoute(String),

    #[error("duplicate key ({sample_id}, side {side})")]
    DuplicateKey { sample_id: String, side: u8 },

    #[error("non-finite embedding in record ({sample_id}, side {side})")]
    NonFinite { sample_id: String, side: u8 },

    #[error("invalid record ({sample_id}, side {side}): {reason}")]
    InvalidRecord {
        sample_id: String,
        side: u8,
        reason: String,
    },

    #[error("not found: ({sample_id}, side {side})")]
    NotFound { sample_id: String, side: u8 },

    #[error("corrupt index: {0}")]
    CorruptIndex(String),

    #[error("truncated blob: need bytes up to {needed}, blob has {available}")]
    TruncatedBlob { needed: u64, available: u64 },

    #[error("span [{start}, {end}) not covered by tokenization")]
    UncoveredSpan { start: usize, end: usize },

    #[error("insufficient layers: need at least 4, got {0}")]
    InsufficientLayers(usize),

    #[error("empty index list")]
    EmptySelection,

    #[error("token index {index} out of range for {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate vector (zero norm)")]
    DegenerateVector,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite score at position {0}")]
    NonFiniteScore(usize),

    #[error("unlabeled sample {0:?}")]
    Unlabeled(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn at_line(line: usize, err: Error) -> Self {
        Error::AtLine {
            line,
            source: Box::new(err),
        }
    }
}
