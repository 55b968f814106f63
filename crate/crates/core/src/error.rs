use thiserror::Error;

use crate::QubitId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid wire {0}")]
    InvalidWire(QubitId),
    #[error("gate {0} is not unitary")]
    NonUnitaryGate(String),
    #[error("unknown gate {0}")]
    UnknownGate(String),
    #[error("invalid wrap: {0}")]
    InvalidWrap(String),
    #[error("control wire {0} has not been measured")]
    UnmeasuredControl(QubitId),
    #[error("qubit {0} has not been measured")]
    UnmeasuredQubit(QubitId),
    #[error("assertion failed: {0}")]
    AssertionFailed(String),
    #[error("state of 2^{qubits} amplitudes exceeds the limit of 2^{limit}")]
    TooLarge { qubits: usize, limit: usize },
    #[error("circuit is not reversible: {0}")]
    NotReversible(String),
    #[error("unsupported gate {gate} on wire {wire}")]
    UnsupportedGate { gate: String, wire: QubitId },
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
