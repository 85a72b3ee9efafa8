use thiserror::Error;

/// Errors produced anywhere in the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("pattern assignment failed: {0}")]
    Pattern(String),
    #[error("invalid pattern sequence: {0}")]
    Sequence(String),
    #[error("invalid circuit: {0}")]
    Circuit(String),
    #[error("missing gate parameters for coupler ({0}, {1})")]
    MissingParams(usize, usize),
    #[error("invalid bipartition: {0}")]
    Bipartition(String),
    #[error("qubit {qubit} out of range for {n_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("two-qubit gate needs distinct qubits, got {0} twice")]
    RepeatedQubit(usize),
    #[error("{n_qubits} qubits exceeds the simulator limit of {limit}")]
    SizeLimit { n_qubits: usize, limit: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("distribution is not normalised (sum = {0})")]
    NotNormalized(f64),
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("patch partition: {0}")]
    Partition(String),
    #[error("tensor network: {0}")]
    Network(String),
    #[error("network is disconnected into {0} components")]
    Disconnected(usize),
    #[error("slicing cannot reach rank cap {cap}: {reason}")]
    SliceCap { cap: f64, reason: String },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
