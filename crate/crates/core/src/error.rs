use std::io;

use thiserror::Error;

/// Errors produced by the decoding engine and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("all weights are zero")]
    AllZeroWeights,
    #[error("invalid weight {value} at index {index}")]
    InvalidWeight { index: usize, value: f64 },
    #[error("drafter assigns zero probability to token {0}")]
    DrafterZeroProb(u32),
    #[error("residual distribution is degenerate (p == q after a rejection)")]
    DegenerateResidual,
    #[error("vocabulary mismatch: expected {expected}, got {got}")]
    VocabMismatch { expected: usize, got: usize },
    #[error("token {token} out of range for vocabulary of size {vocab}")]
    InvalidToken { token: u32, vocab: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unknown symbol {0}")]
    UnknownSymbol(u32),
    #[error("exact enumeration of {outcomes} outcomes exceeds the limit of {limit}")]
    EnumerationTooLarge { outcomes: f64, limit: u64 },
    #[error("decode did not terminate after {iterations} iterations ({committed} of {target} tokens committed)")]
    NonTermination {
        iterations: usize,
        committed: usize,
        target: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
