use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coordinate {value} at position {index} lies outside [0, 1]")]
    Domain { index: usize, value: f64 },

    #[error("sample is empty")]
    EmptySample,

    #[error("sample value {value} at position {index} lies outside [0, 1]; pass the rescale option to map it affinely")]
    OutOfRange { index: usize, value: f64 },

    #[error("sample value at position {index} is not finite")]
    NonFinite { index: usize },

    #[error("insufficient sample: {required} observations required, {available} available")]
    InsufficientSample { required: u128, available: usize },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("atom set lives on grid (k={found_k}, level={found_level}) but grid (k={expected_k}, level={expected_level}) was required")]
    GridMismatch {
        expected_k: u32,
        expected_level: u32,
        found_k: u32,
        found_level: u32,
    },

    #[error("atom index {index} out of range for a grid with {count} atoms")]
    AtomOutOfRange { index: usize, count: usize },

    #[error("exact solver refused a matrix whose smaller side is {side} (cap {cap})")]
    SolverCapExceeded { side: usize, cap: usize },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schedule config: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Number of observations the failing computation needed, if this is a
    /// sample-length shortfall.
    pub fn required_length(&self) -> Option<u128> {
        match self {
            Error::InsufficientSample { required, .. } => Some(*required),
            _ => None,
        }
    }
}
