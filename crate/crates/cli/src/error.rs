//! Failures mapped to exit codes: 2 for bad input, 3 for runtime errors.

use std::fmt;

use lgsim_core::LgsimError;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Self::Runtime(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<LgsimError> for CliError {
    fn from(e: LgsimError) -> Self {
        match e {
            LgsimError::Config(_)
            | LgsimError::InvalidScenario(_)
            | LgsimError::InvalidGrid(_)
            | LgsimError::InvalidDistribution(_)
            | LgsimError::InvalidCounts(_)
            | LgsimError::CalibrationTooLarge { .. } => Self::Usage(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}
