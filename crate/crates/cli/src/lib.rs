//! Parsing and document layers shared by the `engel` binary and its tests.

pub mod doc;
pub mod expr;

use engel_core::Error;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    pub fn from_core(module: &str, e: Error) -> Self {
        let code = match e {
            Error::NotCorankOne { .. }
            | Error::DependentForms
            | Error::NoSymbolicAnnihilator
            | Error::HypothesisViolation(_)
            | Error::ResidualDependence
            | Error::SolveFailure(_)
            | Error::ChartExit(_) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: format!("{module}: {e}"),
        }
    }
}
