use std::f64::consts::TAU;

use clap::Args;
use serde::Serialize;
use serde_json::json;
use su2_butterfly::floquet::{
    build_operator, eigenphases_unsplit, verify_dressed_identity, FloquetParams, OperatorKind,
    SectorFloquet, FOUR_PI,
};
use su2_butterfly::su2::{build_parity, SpinOperators, Tolerances};
use su2_butterfly::sweep::hausdorff_circle;

use crate::args::{parse_real, RunArgs, SpinArgs};
use crate::error::{CliError, CliResult};
use crate::output::{write_json, Meta};

/// Structural checks of the operators and spectra.
#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub spin: SpinArgs,
    /// Kick strength α·J
    #[arg(long, default_value = "1", value_parser = parse_real)]
    pub alpha_scaled: f64,
    /// Comma-separated ħ_η test points
    #[arg(long, value_parser = parse_real, value_delimiter = ',', default_value = "golden,1.3,5.1,9.7")]
    pub hbar_eta: Vec<f64>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    /// `below` or `above`
    pub rule: &'static str,
    pub passed: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            name,
            value,
            threshold,
            rule: "below",
            passed: value < threshold,
        }
    }

    fn above(name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            name,
            value,
            threshold,
            rule: "above",
            passed: value > threshold,
        }
    }
}

pub fn run(args: &VerifyArgs) -> CliResult<()> {
    let basis = args.spin.basis()?;
    if args.hbar_eta.is_empty() {
        return Err(CliError::config("--hbar-eta needs at least one value"));
    }
    let ops = SpinOperators::new(basis);
    let (parity, _) = build_parity(&basis);
    let system = SectorFloquet::new(basis, args.alpha_scaled)?;
    let tol = Tolerances::default();

    let mut unitarity = 0.0f64;
    let mut commutator = 0.0f64;
    let mut periodicity = 0.0f64;
    let mut reflection = 0.0f64;
    let mut dressed = 0.0f64;
    let mut fprime_equal = 0.0f64;
    let mut fprime_unequal = f64::INFINITY;
    let gamma = if basis.is_integer() { TAU } else { 4.0 * TAU };
    for &x in &args.hbar_eta {
        let params = FloquetParams::new_unreduced(&basis, args.alpha_scaled, x)?;
        for kind in [OperatorKind::Floquet, OperatorKind::KickedTop] {
            let f = build_operator(&ops, &params, kind)?;
            unitarity = unitarity.max(f.unitarity_residual());
            commutator = commutator.max(f.commutator(&parity).max_abs());
        }
        let f = build_operator(&ops, &params, OperatorKind::Floquet)?;
        let shifted = FloquetParams::new_unreduced(&basis, args.alpha_scaled, x + FOUR_PI)?;
        let g = build_operator(&ops, &shifted, OperatorKind::Floquet)?;
        periodicity = periodicity.max(hausdorff_circle(
            &eigenphases_unsplit(&f, &tol)?,
            &eigenphases_unsplit(&g, &tol)?,
        ));
        let a = system.spectrum(OperatorKind::Floquet, x, false)?.phases();
        let b = system
            .spectrum(OperatorKind::Floquet, FOUR_PI - x, false)?
            .phases();
        reflection = reflection.max(hausdorff_circle(&a, &b));
        dressed = dressed.max(verify_dressed_identity(&ops, &params)?);
        let fp = build_operator(&ops, &params, OperatorKind::Fprime { gamma })?;
        fprime_equal = fprime_equal.max(fp.max_abs_diff(&f));
        let fq = build_operator(&ops, &params, OperatorKind::Fprime { gamma: 1.0 })?;
        fprime_unequal = fprime_unequal.min(fq.max_abs_diff(&f));
    }
    let at_collapse = system
        .spectrum(OperatorKind::Floquet, TAU, false)?
        .max_abs_phase();

    let mut checks = vec![
        Check::below("unitarity", unitarity, 1e-10),
        Check::below("parity_commutator", commutator, 1e-10),
        Check::below("periodicity_4pi", periodicity, 1e-8),
        Check::below("reflection_2pi", reflection, 1e-8),
        Check::below("dressed_identity", dressed, 1e-8),
        Check::below("fprime_equals_floquet", fprime_equal, 1e-10),
    ];
    checks.push(Check::above(
        "fprime_differs_otherwise",
        fprime_unequal,
        1e-6,
    ));
    checks.push(if basis.is_integer() {
        Check::below("collapse_at_2pi", at_collapse, 1e-8)
    } else {
        Check::above("no_collapse_at_2pi", at_collapse, 1e-2)
    });

    for c in &checks {
        println!(
            "{:<26} {:>10.3e} {} {:.0e}  {}",
            c.name,
            c.value,
            if c.rule == "below" { "<" } else { ">" },
            c.threshold,
            if c.passed { "ok" } else { "FAILED" }
        );
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    let results = json!({ "j": basis.j(), "fprime_gamma": gamma, "checks": checks });
    write_json(&args.run.out, "verify.json", &results)?;
    write_json(
        &args.run.out,
        "meta.json",
        &Meta::new("verify", args, results),
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}
