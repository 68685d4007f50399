use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n}-qubit register")]
    QubitOutOfRange { index: usize, n: usize },
    #[error("two-qubit gate acts twice on qubit {0}")]
    RepeatedTarget(usize),
    #[error("qubit {qubit} used twice in layer {layer}")]
    LayerOverlap { layer: usize, qubit: usize },
    #[error("dimension mismatch: expected {expected} qubits, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{n} qubits exceeds the configured cap of {cap}")]
    TooManyQubits { n: usize, cap: usize },
    #[error("invalid bitstring {0:?}")]
    InvalidBitstring(String),
    #[error("parameter vector has length {got}, expected {expected}")]
    ParameterLength { expected: usize, got: usize },
    #[error("unknown gate kind {0:?}")]
    UnknownGate(String),
    #[error("gate {kind} expects {expected} targets and {params} parameters")]
    GateArity {
        kind: String,
        expected: usize,
        params: usize,
    },
    #[error("state norm {0:e} is too small to normalize")]
    DegenerateState(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{paths} Feynman paths exceed the cap of {cap}")]
    PathCapExceeded { paths: u128, cap: u128 },
    #[error("sparse state has empty support")]
    EmptySupport,
    #[error("no starting bitstring with nonzero probability after {0} attempts")]
    ColdStart(usize),
    #[error("measurement budget too small: exp(-2 M eps^2) >= p_m requires M >= {min_shots}")]
    InsufficientBudget { min_shots: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::QubitOutOfRange { .. } => "qubit_out_of_range",
            Error::RepeatedTarget(_) => "repeated_target",
            Error::LayerOverlap { .. } => "layer_overlap",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::TooManyQubits { .. } => "too_many_qubits",
            Error::InvalidBitstring(_) => "invalid_bitstring",
            Error::ParameterLength { .. } => "parameter_length",
            Error::UnknownGate(_) => "unknown_gate",
            Error::GateArity { .. } => "gate_arity",
            Error::DegenerateState(_) => "degenerate_state",
            Error::Precondition(_) => "precondition",
            Error::PathCapExceeded { .. } => "path_cap_exceeded",
            Error::EmptySupport => "empty_support",
            Error::ColdStart(_) => "cold_start",
            Error::InsufficientBudget { .. } => "insufficient_budget",
            Error::Config(_) => "config",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}
