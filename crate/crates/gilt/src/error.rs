use thiserror::Error;

/// Crate-wide error type. Internal shape bugs in the tensor engine panic
/// instead; this enum covers everything a caller can trigger with data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid edge ({head},{dep}) in graph of {num_words} words: {reason}")]
    InvalidEdge {
        head: usize,
        dep: usize,
        num_words: usize,
        reason: &'static str,
    },

    #[error("word index {word} out of range (graph has {num_words} words)")]
    WordOutOfRange { word: usize, num_words: usize },

    #[error("token index {token} out of range (sentence has {num_tokens} tokens)")]
    TokenOutOfRange { token: usize, num_tokens: usize },

    #[error("corpus parse error at line {line}: {msg}")]
    CorpusParse { line: usize, msg: String },

    #[error("corpus example {id} invalid: {msg}")]
    CorpusInvalid { id: usize, msg: String },

    #[error("word {word} has {count} gold dependencies, exceeding the count bound C={bound}; raise max_count")]
    CountOverflow {
        word: usize,
        count: usize,
        bound: usize,
    },

    #[error("feature value {value} for {feature} exceeds cap {cap}; raise the cap")]
    CapExceeded {
        feature: &'static str,
        value: u64,
        cap: u64,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("token id {id} out of vocabulary range {vocab}")]
    TokenIdOutOfRange { id: usize, vocab: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
