use thiserror::Error;

/// Errors produced by the simulator and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("variable count mismatch: {left} vs {right}")]
    VarCountMismatch { left: usize, right: usize },

    #[error("assignment length {got} does not match variable count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("variable index {index} out of range for {n_vars} variables")]
    VarOutOfRange { index: usize, n_vars: usize },

    #[error("coefficient {value} does not fit the integer coefficient width at precision {precision_bits}")]
    CoefficientOverflow { value: f64, precision_bits: u32 },

    #[error("value {value} does not fit a {m}-bit two's complement register")]
    RegisterOverflow { value: i64, m: u32 },

    #[error("register readout {got} disagrees with encoded value {expected}")]
    RegisterMismatch { expected: i64, got: i64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid activation-pattern table: {0}")]
    InvalidTable(String),

    #[error("expected {expected} bits, got {got}")]
    BitCount { expected: usize, got: usize },

    #[error("point {0} is not a constellation point")]
    NotAConstellationPoint(String),

    #[error("activation pattern {0:?} is not in the codebook")]
    PatternNotInCodebook(Vec<usize>),

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("{n_qubits} qubits exceeds the state-vector limit of {limit}")]
    TooManyQubits { n_qubits: usize, limit: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("norm expansion left an imaginary coefficient of {0:e}")]
    ImaginaryResidue(f64),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
