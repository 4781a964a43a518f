use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("malformed matrix text at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("prime window ({lower}, {upper}) exhausted after issuing {issued} primes")]
    PrimesExhausted { lower: u64, upper: u64, issued: usize },

    #[error("prime window too small: {0}")]
    WindowTooSmall(String),

    #[error("matrix is singular")]
    Singular,

    #[error("rational reconstruction failed")]
    ReconstructionFailed,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
