use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsimError {
    #[error("invalid state preparation: {0}")]
    InvalidPreparation(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid Hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("invalid time interval: t_start = {t_start}, t_end = {t_end}")]
    InvalidTimeInterval { t_start: f64, t_end: f64 },

    #[error("invalid Trotter plan: {0}")]
    InvalidTrotterPlan(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid noise parameter: {0}")]
    InvalidNoiseParameter(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid confusion matrix: {0}")]
    InvalidConfusionMatrix(String),

    #[error("register of {requested} qubits exceeds the cap of {cap}")]
    TooManyQubits { requested: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, QsimError>;
