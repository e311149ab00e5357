use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {nqubits}-qubit register")]
    QubitOutOfRange { index: usize, nqubits: usize },
    #[error("control and target are the same qubit ({0})")]
    ControlIsTarget(usize),
    #[error("gate kind {kind} {detail}")]
    ControlMismatch {
        kind: &'static str,
        detail: &'static str,
    },
    #[error("rotation angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("register size mismatch: expected {expected} qubits, got {actual}")]
    QubitCountMismatch { expected: usize, actual: usize },
    #[error("register must have between 1 and {max} qubits, got {got}")]
    InvalidQubitCount { got: usize, max: usize },
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("slowness {value} at layer {layer} is not representable with {bits} bits")]
    SlownessOutOfRange { layer: usize, value: u64, bits: u32 },
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0} mutation is not applicable to this circuit")]
    Inapplicable(&'static str),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
