use thiserror::Error;

/// Malformed textual input (hex strings, DIMACS, gate lists, configs).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error: {message}")]
pub struct ParseError {
    pub message: String,
}

impl ParseError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("instance needs {needed} bits but the target length is {target}")]
    Overflow { needed: usize, target: usize },

    #[error("cannot pad a string of length {len} to length {target}")]
    Length { len: usize, target: usize },

    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("circuit has arity {expected} but input has {actual} bits")]
    ArityMismatch { expected: usize, actual: usize },

    #[error("decider `{decider}` does not support {capability}")]
    UnsupportedCapability { decider: String, capability: &'static str },

    #[error("string does not decode to a valid instance")]
    Decode,

    #[error("list entry {index} has length {actual}, expected {expected}")]
    LengthMismatch { index: usize, expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },

    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
