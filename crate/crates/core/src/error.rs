use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Pauli character {0:?}")]
    InvalidPauliChar(char),

    #[error("Pauli string length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("outcome bitstring {0:?} is malformed")]
    MalformedOutcome(String),

    #[error("string {0} contains X or Y; apply the basis rotation before reading eigenvalues")]
    UnrotatedPauli(String),

    #[error("coefficient {0} is not finite")]
    NonFiniteCoefficient(f64),

    #[error("terms {0} and {1} in the same clique are not qubit-wise commuting")]
    NotQubitwiseCommuting(String, String),

    #[error("a clique must contain at least one term")]
    EmptyClique,

    #[error("identity term cannot be a clique member")]
    IdentityInClique,

    #[error("invalid clique assignment: {0}")]
    InvalidCliqueAssignment(String),

    #[error("unknown molecule {0:?}")]
    UnknownMolecule(String),

    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),

    #[error("unknown noise channel {0:?}")]
    UnknownChannel(String),

    #[error("{qubits} qubits exceeds the dense limit of {limit}")]
    DimensionOverflow { qubits: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitOutOfRange { index: usize, qubits: usize },

    #[error("CNOT control and target must differ (both {0})")]
    CnotSameQubit(usize),

    #[error("expected {expected} parameters, got {actual}")]
    WrongParameterCount { expected: usize, actual: usize },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("empty sample set")]
    EmptySamples,

    #[error("at least two samples are needed for a standard deviation")]
    TooFewSamples,

    #[error("shot count must be positive for every clique")]
    ZeroShots,

    #[error("budget {budget} is smaller than required minimum {required}")]
    BudgetTooSmall { budget: u64, required: u64 },

    #[error("all clique amplitudes are zero")]
    ZeroAmplitudes,

    #[error("all standard deviations are zero")]
    ZeroDeviation,

    #[error("variance threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),

    #[error("allocation covers {actual} cliques but the Hamiltonian has {expected}")]
    AllocationMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input")]
    EmptyInput,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
