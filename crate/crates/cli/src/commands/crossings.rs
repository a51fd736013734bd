use std::path::Path;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use su2_butterfly::crossings::{
    census, powerlaw_fit, CensusConfig, CrossingCensus, CrossingConfig, TrackMode,
};
use su2_butterfly::su2::SpinBasis;

use crate::args::{parse_real, RunArgs};
use crate::error::{CliError, CliResult};
use crate::output::{num, write_json, CsvFile, Meta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackingArg {
    Adiabatic,
    Overlap,
}

/// Level-crossing census over ħ_η ∈ [0, 4π).
#[derive(Debug, Clone, Args, Serialize)]
pub struct CrossingsArgs {
    /// Total boson number N (J = N/2)
    #[arg(long = "N", value_name = "N", group = "spin")]
    pub n: Option<u32>,
    /// Spin J
    #[arg(long = "J", value_name = "J", group = "spin")]
    pub j: Option<f64>,
    /// Range of J as FROM:TO[:STEP], e.g. 3:12
    #[arg(long = "J-range", value_name = "RANGE", group = "spin")]
    pub j_range: Option<String>,
    /// Kick strength α·J
    #[arg(long, default_value = "1", value_parser = parse_real)]
    pub alpha_scaled: f64,
    /// log2 of the first grid size
    #[arg(long, default_value_t = 14)]
    pub initial_log2: u32,
    /// log2 of the largest grid size
    #[arg(long, default_value_t = 20)]
    pub max_log2: u32,
    #[arg(long, value_enum, default_value = "adiabatic")]
    pub tracking: TrackingArg,
    #[command(flatten)]
    pub run: RunArgs,
}

impl CrossingsArgs {
    fn spins(&self) -> CliResult<Vec<SpinBasis>> {
        match (self.n, self.j, &self.j_range) {
            (Some(n), None, None) if n >= 1 => Ok(vec![SpinBasis::from_boson_number(n)?]),
            (Some(_), None, None) => Err(CliError::config("N must be at least 1")),
            (None, Some(j), None) => Ok(vec![SpinBasis::from_spin(j)?]),
            (None, None, Some(r)) => parse_range(r),
            _ => Err(CliError::config(
                "give exactly one of --N, --J and --J-range",
            )),
        }
    }
}

fn parse_range(text: &str) -> CliResult<Vec<SpinBasis>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::config(format!("--J-range {text:?}: {e}")))?;
    let (from, to, step) = match parts[..] {
        [a, b] => (a, b, 1.0),
        [a, b, s] => (a, b, s),
        _ => {
            return Err(CliError::config(format!(
                "--J-range {text:?}: expected FROM:TO[:STEP]"
            )))
        }
    };
    if step <= 0.0 || !step.is_finite() || to < from {
        return Err(CliError::config(format!("--J-range {text:?}: empty range")));
    }
    // work in units of J/2 so that the range is exact
    let (a, b, s) = (
        (2.0 * from).round() as i64,
        (2.0 * to).round() as i64,
        (2.0 * step).round() as i64,
    );
    if s < 1 || (2.0 * step - s as f64).abs() > 1e-9 {
        return Err(CliError::config("--J-range step must be a multiple of 1/2"));
    }
    (a..=b)
        .step_by(s as usize)
        .map(|two_j| Ok(SpinBasis::from_spin(two_j as f64 / 2.0)?))
        .collect()
}

fn census_json(c: &CrossingCensus) -> Value {
    json!({
        "j": c.j,
        "alpha_scaled": c.alpha_scaled,
        "stabilized": c.stabilized,
        "excluding_collapse": {
            "cross_parity": c.n_cross_parity,
            "same_parity": c.n_same_parity,
        },
        "including_collapse": {
            "cross_parity": c.total_cross_parity(),
            "same_parity": c.total_same_parity(),
        },
        "collapse": {
            "cross_parity": c.collapse_cross_parity,
            "same_parity": c.collapse_same_parity,
        },
        "tangential": c.events.iter().filter(|e| e.tangential).count(),
        "unresolved": c.unresolved,
        "grid_resolution_history": c.grid_resolution_history,
    })
}

fn write_census(dir: &Path, c: &CrossingCensus) -> CliResult<()> {
    let comments = vec![
        "command: crossings".to_string(),
        format!(
            "J = {}, alpha_scaled = {}, stabilized = {}",
            c.j,
            num(c.alpha_scaled),
            c.stabilized
        ),
    ];
    let mut csv = CsvFile::create(
        dir,
        "crossings.csv",
        &comments,
        "lambda_star,kind,parity_a,idx_a,parity_b,idx_b,residual_gap,bracket_width",
    )?;
    for e in &c.events {
        csv.row(&[
            num(e.lambda_star),
            e.kind.as_str().to_string(),
            e.level_a.parity.as_str().to_string(),
            e.level_a.track.to_string(),
            e.level_b.parity.as_str().to_string(),
            e.level_b.track.to_string(),
            num(e.residual_gap),
            num(e.refinement_width),
        ])?;
    }
    csv.finish()?;
    write_json(dir, "census.json", &census_json(c))?;
    Ok(())
}

fn fit(points: &[(f64, f64)]) -> Value {
    match powerlaw_fit(points) {
        Ok(p) => json!(p),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn scaling_json(censuses: &[CrossingCensus]) -> Value {
    let pts = |f: &dyn Fn(&CrossingCensus) -> usize| -> Vec<(f64, f64)> {
        censuses.iter().map(|c| (c.j, f(c) as f64)).collect()
    };
    json!({
        "excluding_collapse": {
            "cross_parity": fit(&pts(&|c| c.n_cross_parity)),
            "same_parity": fit(&pts(&|c| c.n_same_parity)),
        },
        "including_collapse": {
            "cross_parity": fit(&pts(&|c| c.total_cross_parity())),
            "same_parity": fit(&pts(&|c| c.total_same_parity())),
        },
        "points": censuses.iter().map(|c| json!({
            "j": c.j,
            "cross_parity": c.n_cross_parity,
            "same_parity": c.n_same_parity,
            "cross_parity_with_collapse": c.total_cross_parity(),
            "same_parity_with_collapse": c.total_same_parity(),
            "stabilized": c.stabilized,
        })).collect::<Vec<_>>(),
    })
}

pub fn run(args: &CrossingsArgs) -> CliResult<()> {
    let spins = args.spins()?;
    if args.initial_log2 < 2 || args.max_log2 < args.initial_log2 || args.max_log2 > 26 {
        return Err(CliError::config(
            "need 2 ≤ --initial-log2 ≤ --max-log2 ≤ 26",
        ));
    }
    let config = CensusConfig {
        initial_log2: args.initial_log2,
        max_log2: args.max_log2,
        crossing: CrossingConfig {
            tracking: match args.tracking {
                TrackingArg::Adiabatic => TrackMode::Adiabatic,
                TrackingArg::Overlap => TrackMode::Overlap,
            },
            ..Default::default()
        },
    };
    let censuses: Vec<CrossingCensus> = spins
        .par_iter()
        .map(|&b| census(b, args.alpha_scaled, &config))
        .collect::<Result<_, _>>()?;

    let single = args.j_range.is_none();
    for c in &censuses {
        let dir = if single {
            args.run.out.clone()
        } else {
            args.run.out.join(format!("J_{}", c.j))
        };
        write_census(&dir, c)?;
    }
    let results = if single {
        census_json(&censuses[0])
    } else {
        let scaling = scaling_json(&censuses);
        write_json(&args.run.out, "scaling.json", &scaling)?;
        scaling
    };
    write_json(
        &args.run.out,
        "meta.json",
        &Meta::new("crossings", args, results),
    )?;

    let unstable: Vec<String> = censuses
        .iter()
        .filter(|c| !c.stabilized)
        .map(|c| c.j.to_string())
        .collect();
    if !unstable.is_empty() {
        return Err(CliError::NonStabilized(format!(
            "census did not stabilize by 2^{} points for J = {}",
            args.max_log2,
            unstable.join(", ")
        )));
    }
    Ok(())
}
