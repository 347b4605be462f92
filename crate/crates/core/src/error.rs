//! Crate error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    InvalidQubit { qubit: usize, n_qubits: usize },

    #[error("bit pattern length {got} does not match {expected} qubits")]
    PatternLength { expected: usize, got: usize },

    #[error("invalid bit pattern {0:?}: only '0' and '1' allowed")]
    InvalidPattern(String),

    #[error("control qubits must be distinct and exclude the target")]
    InvalidControls,

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max |U\u{2020}U - I| = {0:.3e})")]
    NotUnitary(f64),

    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("density matrix trace {got} differs from {expected}")]
    BadTrace { expected: f64, got: f64 },

    #[error("density matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("non-finite value in input")]
    NonFinite,

    #[error("empty cell list")]
    EmptyCellList,

    #[error("empty bit pattern")]
    EmptyPattern,

    #[error("spin {spin} out of range for {n_spins} spins")]
    InvalidSpin { spin: usize, n_spins: usize },

    #[error("spins {i} and {j} have zero coupling: J-evolution is uncompilable")]
    ZeroCoupling { i: usize, j: usize },

    #[error("spins {i} and {j} have zero frequency difference: selective rotation impossible")]
    ZeroOffsetDifference { i: usize, j: usize },

    #[error("spin {0} has zero offset: no phase accrues during delays")]
    ZeroOffset(usize),

    #[error("basis states {a:?} and {b:?} must differ in exactly one bit")]
    NotSingleTransition { a: String, b: String },

    #[error("negative delay {0}s")]
    NegativeDelay(f64),

    #[error("gradient element has no unitary representation")]
    GradientInUnitary,

    #[error("op {op_index}: gate cannot be mapped to the spin system: {reason}")]
    Unmappable { op_index: usize, reason: String },

    #[error("invalid qubit-to-spin map: {0}")]
    BadQubitMap(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("need at least 3 points for a line fit, got {0}")]
    TooFewPoints(usize),

    #[error("degenerate fit: all angles identical")]
    DegenerateAngles,

    #[error("expected {expected} active spins, found {got}")]
    ActiveSpinCount { expected: usize, got: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
