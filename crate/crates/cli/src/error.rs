use std::fmt;
use std::process::ExitCode;

use sauna_core::io::IoError;
use sauna_core::metrics::MetricsError;
use sauna_core::synth::SynthError;
use sauna_core::trainer::TrainError;
use sauna_core::{LossError, TransformError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Io = 1,
    Invalid = 2,
    Verify = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub code: Code,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: Code::Invalid,
            message: message.into(),
        }
    }

    pub fn verify(message: impl Into<String>) -> Self {
        Self {
            code: Code::Verify,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code as u8)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        let code = if e.is_os_error() { Code::Io } else { Code::Invalid };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Io(io) => io.into(),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Synth(s) => s.into(),
            other => Self::invalid(other.to_string()),
        }
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::invalid(e.to_string())
            }
        }
    )*};
}

invalid_from!(TransformError, LossError, MetricsError, sauna_core::GridError);
