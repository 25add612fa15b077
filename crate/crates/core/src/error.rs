use thiserror::Error;

/// Errors raised by the simulation and protocol layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{name}` = {value} violates {constraint}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("expected a {expected}-qubit state, got {found} qubits")]
    WrongQubitCount { expected: usize, found: usize },
    #[error("invalid qubit indices {indices:?} for a {num_qubits}-qubit register")]
    BadQubitIndices {
        indices: Vec<usize>,
        num_qubits: usize,
    },
    #[error("qubit cap exceeded: {requested} qubits requested, at most {cap} supported")]
    QubitCapExceeded { requested: usize, cap: usize },
    #[error("gate is not unitary (max deviation {deviation:e})")]
    NonUnitary { deviation: f64 },
    #[error("POVM elements do not sum to identity (max deviation {deviation:e})")]
    IncompletePovm { deviation: f64 },
    #[error("POVM element `{label}` is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { label: String, min_eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),
    #[error("broken path: {0}")]
    BrokenPath(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("zero-probability branch: {0}")]
    ZeroProbability(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks that `value` is a probability in `[0, 1]`.
pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name,
            value,
            constraint: "0 <= value <= 1",
        })
    }
}
