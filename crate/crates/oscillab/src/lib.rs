//! Experiment layer on top of `oscillab-core`: JSON configuration, Monte
//! Carlo drivers, report writers, run manifests and the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

use oscillab_core::Error;

pub mod cli;
pub mod config;
pub mod fbm;
pub mod lab;
pub mod manifest;
pub mod report;

/// Failure of a command, classified by process exit code.
#[derive(Debug)]
pub enum LabError {
    /// Rejected input (exit code 2).
    Validation(String),
    /// Failure while running (exit code 3).
    Runtime(String),
    Core(Error),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Validation(_) => 2,
            LabError::Runtime(_) => 3,
            LabError::Core(e) => match e {
                Error::ParameterOutOfRange { .. } | Error::InputDomain { .. } | Error::Inconsistent(_) => 2,
                _ => 3,
            },
        }
    }
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Validation(s) => write!(f, "invalid input: {s}"),
            LabError::Runtime(s) => write!(f, "{s}"),
            LabError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for LabError {}

impl From<Error> for LabError {
    fn from(e: Error) -> Self {
        LabError::Core(e)
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Runtime(format!("io error: {e}"))
    }
}
