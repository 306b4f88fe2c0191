use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    Size(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid operator: {0}")]
    Validity(String),
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    Index { index: usize, num_qubits: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("type error: {0}")]
    Type(String),
    #[error(
        "channel at circuit element {element} has a non-invertible superoperator (condition estimate {condition:e})"
    )]
    NonInvertibleChannel { element: usize, condition: f64 },
    #[error("degenerate state: {0}")]
    DegenerateState(String),
}
