use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("{kind} expects {expected} {what}, got {got}")]
    Arity {
        kind: &'static str,
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("qubit {0} appears more than once in a gate")]
    RepeatedQubit(usize),
    #[error("non-finite gate parameter {0}")]
    NonFiniteParam(f64),
    #[error("parameter slot {0} is unbound")]
    Unbound(usize),
    #[error("expected {expected} parameter values, got {got}")]
    BindLength { expected: usize, got: usize },
    #[error("register width mismatch: {expected} vs {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("amplitude array length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("cannot keep {0} qubits in a reduced density matrix (max 4)")]
    TooManyKept(usize),
    #[error("shots must be at least 1")]
    NoShots,
    #[error("noise parameter {0} outside [0, 1]")]
    BadNoise(f64),
    #[error("invalid circuit json: {0}")]
    Json(String),
}
