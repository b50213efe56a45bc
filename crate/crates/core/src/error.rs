use thiserror::Error;

/// Errors raised by the simulator, circuit builders, transpiler and protocol engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit index {index} out of range for {qubit_count} qubits")]
    QubitOutOfRange { index: usize, qubit_count: usize },

    #[error("basis index {index} out of range for {qubit_count} qubits")]
    BasisIndexOutOfRange { index: u64, qubit_count: usize },

    #[error("qubit {0} used as both control and target")]
    ControlIsTarget(usize),

    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),

    #[error("gate {kind} expects {expected_controls} control(s) and {expected_targets} target(s)")]
    GateArity {
        kind: &'static str,
        expected_controls: usize,
        expected_targets: usize,
    },

    #[error("register is empty")]
    EmptyRegister,

    #[error("registers have different lengths ({0} vs {1})")]
    RegisterLengthMismatch(usize, usize),

    #[error("register {0:?} overlaps an existing register")]
    RegisterOverlap(String),

    #[error("qubit count {qubit_count} exceeds capacity {capacity}")]
    Capacity { qubit_count: usize, capacity: usize },

    #[error("shot count must be positive")]
    NoShots,

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("outcome {outcome} has zero probability")]
    ImpossibleOutcome { outcome: u64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("secret value out of range for modulus {modulus}")]
    SecretOutOfRange { modulus: u64 },

    #[error("tamper mask out of range for {qubits}-qubit register")]
    MaskOutOfRange { qubits: usize },

    #[error("literal oracle mode needs a scratch register")]
    MissingScratch,

    #[error("invalid protocol configuration: {0}")]
    Config(String),

    #[error("no route between qubits {0} and {1} in the coupling map")]
    Unroutable(usize, usize),

    #[error("invalid coupling map: {0}")]
    CouplingMap(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid file contents: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
