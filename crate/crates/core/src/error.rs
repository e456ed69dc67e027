use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("configuration has {got} bits, model has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },

    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("state index {index} out of range for {bits} bits")]
    IndexOutOfRange { index: usize, bits: usize },

    #[error("brute-force oracle refused: {n} vertices exceeds the limit of {limit}")]
    OracleLimit { n: usize, limit: usize },

    #[error("simulator refused: {m} qubits exceeds the limit of {limit}")]
    SimulatorLimit { m: usize, limit: usize },

    #[error("dense materialization refused: {size} exceeds the limit of {limit}")]
    MaterializeLimit { size: usize, limit: usize },

    #[error("qubit {qubit} out of range for {m} qubits")]
    QubitOutOfRange { qubit: usize, m: usize },

    #[error("angle domain error: {0}")]
    Domain(String),

    #[error("success probability {0:e} is too small to condition on")]
    DegenerateSuccess(f64),

    #[error("no accepted samples in {trials} trials")]
    NoAcceptedSamples { trials: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("distribution is not normalized (sum = {0})")]
    NotNormalized(f64),

    #[error("support size mismatch: {0} vs {1}")]
    SupportMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("qasm parse error on line {line}: {msg}")]
    Qasm { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    /// Short stable identifier, used by the CLI's machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "invalid_model",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::VertexOutOfRange { .. } => "vertex_out_of_range",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::OracleLimit { .. } => "oracle_limit",
            Error::SimulatorLimit { .. } => "simulator_limit",
            Error::MaterializeLimit { .. } => "materialize_limit",
            Error::QubitOutOfRange { .. } => "qubit_out_of_range",
            Error::Domain(_) => "domain",
            Error::DegenerateSuccess(_) => "degenerate_success",
            Error::NoAcceptedSamples { .. } => "no_accepted_samples",
            Error::Empty(_) => "empty",
            Error::NotNormalized(_) => "not_normalized",
            Error::SupportMismatch(..) => "support_mismatch",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Qasm { .. } => "qasm_parse",
            Error::Io(_) => "io",
            Error::Serde(_) => "serde",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
