use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("symbol {value} at position {index} is not in the alphabet")]
    SymbolOutOfAlphabet { index: usize, value: f64 },
    #[error("symbol index {0} precedes the start of the data sequence")]
    NeedsInitialization(i64),
    #[error("burst length {len} is not a multiple of the antenna count {lt}")]
    PartialBlock { len: usize, lt: usize },
    #[error("antenna index {m} out of range 1..={lt}")]
    AntennaOutOfRange { m: usize, lt: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("block {block} is not fully covered by the waveform")]
    IncompleteBlock { block: usize },
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
