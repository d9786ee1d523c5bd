use qsim_core::QsimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LgsimError {
    #[error(transparent)]
    Simulation(#[from] QsimError),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("cannot combine correlators from different methods: {0}")]
    MixedMethod(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("calibration of {num_bits} bits exceeds the cap of {cap}")]
    CalibrationTooLarge { num_bits: usize, cap: usize },

    #[error("mitigation failed: {0}")]
    MitigationFailed(String),

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, LgsimError>;
