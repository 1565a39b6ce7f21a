// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::process::ExitCode;

use cpflux_core::Error;

/// A command failure, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or unusable input data (exit 2).
    Input(String),
    /// Invalid flags or settings (exit 3).
    Config(String),
    /// Anything else (exit 1).
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Input(_) => 2,
            Failure::Config(_) => 3,
            Failure::Internal(_) => 1,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::EmptyInput { .. }
            | Error::Parse { .. }
            | Error::ColumnNotFound(_)
            | Error::DegenerateSeries
            | Error::TooShort { .. }
            | Error::Io(_) => Failure::Input(msg),
            Error::InvalidSigma(_)
            | Error::InvalidConfig(_)
            | Error::Infeasible { .. }
            | Error::TooLarge { .. } => Failure::Config(msg),
            Error::IndexOutOfRange { .. }
            | Error::InvalidChangepoints(_)
            | Error::LengthMismatch { .. }
            | Error::Json(_) => Failure::Internal(msg),
        }
    }
}
