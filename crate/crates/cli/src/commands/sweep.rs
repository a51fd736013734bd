use clap::Args;
use serde::Serialize;
use serde_json::json;
use su2_butterfly::sweep::{invariant_summary, run_sweep_partial, symmetry_report, SweepPlan};

use super::{positive, OperatorArg};
use crate::args::{parse_real, RunArgs, SpinArgs};
use crate::error::{CliError, CliResult};
use crate::output::{num, write_json, CsvFile, Meta};

/// Eigen-phase spectrum over a grid of ħ_η.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub spin: SpinArgs,
    /// Kick strength α·J
    #[arg(long, default_value = "1", value_parser = parse_real)]
    pub alpha_scaled: f64,
    /// Number of equally spaced points over [0, 4π)
    #[arg(long, default_value_t = 2048, conflicts_with = "hbar_eta")]
    pub grid: usize,
    /// Explicit comma-separated ħ_η values instead of a uniform grid
    #[arg(long, value_parser = parse_real, value_delimiter = ',')]
    pub hbar_eta: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "floquet")]
    pub operator: OperatorArg,
    /// γ = 4·g0·τ/ξ for the fprime operator
    #[arg(long, value_parser = parse_real)]
    pub gamma: Option<f64>,
    /// Skip the per-point eigenpair residual check
    #[arg(long)]
    pub no_residuals: bool,
    /// Largest accepted ‖Fv − e^{−iε}v‖
    #[arg(long, default_value_t = 1e-9)]
    pub residual_tol: f64,
    #[command(flatten)]
    pub run: RunArgs,
}

pub fn run(args: &SweepArgs) -> CliResult<()> {
    let basis = args.spin.basis()?;
    let operator = args.operator.kind(args.gamma)?;
    positive("--residual-tol", args.residual_tol)?;
    if args.hbar_eta.is_none() && args.grid == 0 {
        return Err(CliError::config("--grid must be at least 1"));
    }
    let plan = match &args.hbar_eta {
        Some(list) => SweepPlan::new(basis, args.alpha_scaled, list.clone(), operator)?,
        None => SweepPlan::uniform(basis, args.alpha_scaled, args.grid, operator)?,
    }
    .with_vectors(!args.no_residuals);

    let comments = vec![
        format!("command: sweep, operator {}", operator.name()),
        format!(
            "J = {}, alpha_scaled = {}, points = {}",
            basis.j(),
            num(args.alpha_scaled),
            plan.grid.len()
        ),
    ];
    let mut csv = CsvFile::create(
        &args.run.out,
        "spectrum.csv",
        &comments,
        "hbar_eta,epsilon,parity",
    )?;
    let outcome = run_sweep_partial(&plan);
    for record in &outcome.records {
        let x = num(record.hbar_eta);
        for (eps, parity) in record.rows() {
            csv.row(&[x.clone(), num(eps), parity.as_str().to_string()])?;
        }
    }
    if let Some(err) = outcome.failure {
        csv.abandon();
        return Err(err.into());
    }
    let records = outcome.records;
    let invariants = invariant_summary(&plan, &records)?;
    let symmetry = match symmetry_report(&records) {
        Ok(r) => json!({ "pairs": r.pairs.len(), "max_distance": r.max_distance }),
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    let residual_ok = invariants
        .max_eigen_residual
        .is_none_or(|r| r <= args.residual_tol);
    let results = json!({
        "rows": records.iter().map(|r| r.len()).sum::<usize>(),
        "invariants": invariants,
        "symmetry": symmetry,
        "residual_check_passed": residual_ok,
    });
    if !residual_ok {
        csv.abandon();
        write_json(
            &args.run.out,
            "meta.json",
            &Meta::new("sweep", args, results),
        )?;
        return Err(CliError::CheckFailed(format!(
            "eigenpair residual {:.3e} exceeds {:.3e}",
            invariants.max_eigen_residual.unwrap_or(f64::NAN),
            args.residual_tol
        )));
    }
    csv.finish()?;
    write_json(
        &args.run.out,
        "meta.json",
        &Meta::new("sweep", args, results),
    )?;
    Ok(())
}
