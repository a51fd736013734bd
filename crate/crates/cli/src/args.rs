use std::f64::consts::PI;

use clap::Args;
use serde::Serialize;
use su2_butterfly::su2::SpinBasis;

use crate::error::{CliError, CliResult};

/// Exactly one of the boson number N and the spin J = N/2.
#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct SpinArgs {
    /// Total boson number N (J = N/2)
    #[arg(long = "N", value_name = "N")]
    pub n: Option<u32>,
    /// Spin J, integer or half-integer
    #[arg(long = "J", value_name = "J")]
    pub j: Option<f64>,
}

impl SpinArgs {
    pub fn basis(&self) -> CliResult<SpinBasis> {
        match (self.n, self.j) {
            (Some(n), None) => {
                if n == 0 {
                    return Err(CliError::config("N must be at least 1"));
                }
                Ok(SpinBasis::from_boson_number(n)?)
            }
            (None, Some(j)) => Ok(SpinBasis::from_spin(j)?),
            _ => Err(CliError::config("give exactly one of --N and --J")),
        }
    }
}

/// Common run options.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    /// Output directory (created if missing)
    #[arg(long, short, default_value = ".")]
    pub out: std::path::PathBuf,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Parses a real number, `golden` = (√5−1)π/2, or a multiple of π such as
/// `pi`, `2pi`, `-0.5*pi`, `3pi/4`.
pub fn parse_real(text: &str) -> Result<f64, String> {
    let s = text.trim().to_ascii_lowercase();
    if s == "golden" {
        return Ok((5f64.sqrt() - 1.0) * PI / 2.0);
    }
    let value = match s.find("pi") {
        None => s.parse::<f64>().map_err(|e| format!("{text:?}: {e}"))?,
        Some(at) => {
            let coef = s[..at].trim().trim_end_matches('*').trim();
            let coef = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|e| format!("{text:?}: {e}"))?,
            };
            let rest = s[at + 2..].trim();
            let div = if rest.is_empty() {
                1.0
            } else if let Some(d) = rest.strip_prefix('/') {
                d.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("{text:?}: {e}"))?
            } else {
                return Err(format!("{text:?}: unexpected {rest:?} after pi"));
            };
            coef * PI / div
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{text:?} is not finite"))
    }
}
