pub mod classical;
pub mod crossings;
pub mod fractal;
pub mod sweep;
pub mod verify;

use su2_butterfly::floquet::OperatorKind;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorArg {
    Floquet,
    KickedTop,
    Fprime,
}

impl OperatorArg {
    pub fn kind(self, gamma: Option<f64>) -> CliResult<OperatorKind> {
        match (self, gamma) {
            (OperatorArg::Floquet, None) => Ok(OperatorKind::Floquet),
            (OperatorArg::KickedTop, None) => Ok(OperatorKind::KickedTop),
            (OperatorArg::Fprime, Some(gamma)) => Ok(OperatorKind::Fprime { gamma }),
            (OperatorArg::Fprime, None) => Err(CliError::config("--operator fprime needs --gamma")),
            (_, Some(_)) => Err(CliError::config(
                "--gamma applies only to --operator fprime",
            )),
        }
    }
}

/// Positive and finite.
pub fn positive(name: &str, value: f64) -> CliResult<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::config(format!(
            "{name} must be positive, got {value}"
        )))
    }
}
