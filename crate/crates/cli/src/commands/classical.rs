use clap::Args;
use serde::Serialize;
use serde_json::json;
use su2_butterfly::classical::{
    correspondence, meridian_seeds, poincare_section, section_occupancy, ClassicalParams,
    SphereState,
};

use super::positive;
use crate::args::{parse_real, RunArgs};
use crate::error::{CliError, CliResult};
use crate::output::{num, write_json, CsvFile, Meta};

/// Poincaré section of the mean-field map, or its comparison with the quantum evolution.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ClassicalArgs {
    /// Kick angle α
    #[arg(long, value_parser = parse_real)]
    pub alpha: f64,
    /// Torsion strength η
    #[arg(long, value_parser = parse_real)]
    pub eta: f64,
    /// Number of seeds on the meridian through (1, 0, 0)
    #[arg(long, default_value_t = 40)]
    pub seeds: usize,
    /// Periods per seed (section) or in total (correspondence)
    #[arg(long)]
    pub periods: Option<usize>,
    /// Cells per side of the occupancy grid over [−1, 1]²
    #[arg(long, default_value_t = 50)]
    pub occupancy_grid: usize,
    /// Compare a coherent state with the classical orbit instead
    #[arg(long)]
    pub correspondence: bool,
    /// Spin J of the quantum comparison
    #[arg(long = "J", value_name = "J", requires = "correspondence")]
    pub j: Option<f64>,
    /// Total boson number N of the quantum comparison
    #[arg(
        long = "N",
        value_name = "N",
        requires = "correspondence",
        conflicts_with = "j"
    )]
    pub n: Option<u32>,
    /// Polar angle of the starting point
    #[arg(long, default_value = "1.2", value_parser = parse_real)]
    pub theta: f64,
    /// Azimuth of the starting point
    #[arg(long, default_value = "0.3", value_parser = parse_real)]
    pub phi: f64,
    /// Deviation reported as within tolerance
    #[arg(long, default_value_t = 1e-2)]
    pub tolerance: f64,
    #[command(flatten)]
    pub run: RunArgs,
}

pub fn run(args: &ClassicalArgs) -> CliResult<()> {
    let params = ClassicalParams::new(args.alpha, args.eta)?;
    if args.correspondence {
        return run_correspondence(args, &params);
    }
    if args.seeds == 0 || args.occupancy_grid == 0 {
        return Err(CliError::config(
            "--seeds and --occupancy-grid must be positive",
        ));
    }
    let periods = args.periods.unwrap_or(4000);
    let seeds = meridian_seeds(args.seeds);
    let points = poincare_section(&seeds, &params, periods);
    let comments = vec![
        "command: classical".to_string(),
        format!(
            "alpha = {}, eta = {}, seeds = {}, periods = {periods}",
            num(args.alpha),
            num(args.eta),
            args.seeds
        ),
    ];
    let mut csv = CsvFile::create(
        &args.run.out,
        "section.csv",
        &comments,
        "seed_id,period,y,z",
    )?;
    for p in &points {
        csv.row(&[p.seed.to_string(), p.period.to_string(), num(p.y), num(p.z)])?;
    }
    csv.finish()?;
    let results = json!({
        "points": points.len(),
        "occupancy": section_occupancy(&points, args.occupancy_grid),
        "seeds": seeds.iter().map(SphereState::as_array).collect::<Vec<_>>(),
    });
    write_json(
        &args.run.out,
        "meta.json",
        &Meta::new("classical", args, results),
    )?;
    Ok(())
}

fn run_correspondence(args: &ClassicalArgs, params: &ClassicalParams) -> CliResult<()> {
    positive("--tolerance", args.tolerance)?;
    let basis = match (args.n, args.j) {
        (Some(0), _) => return Err(CliError::config("N must be at least 1")),
        (Some(n), None) => su2_butterfly::su2::SpinBasis::from_boson_number(n)?,
        (None, Some(j)) => su2_butterfly::su2::SpinBasis::from_spin(j)?,
        _ => return Err(CliError::config("--correspondence needs --J or --N")),
    };
    let periods = args.periods.unwrap_or(10);
    let c = correspondence(basis, params, args.theta, args.phi, periods)?;
    let comments = vec![
        "command: classical --correspondence".to_string(),
        format!(
            "J = {}, alpha = {}, eta = {}, theta = {}, phi = {}",
            basis.j(),
            num(args.alpha),
            num(args.eta),
            num(args.theta),
            num(args.phi)
        ),
    ];
    let mut csv = CsvFile::create(
        &args.run.out,
        "correspondence.csv",
        &comments,
        "period,quantum_x,quantum_y,quantum_z,classical_x,classical_y,classical_z,deviation",
    )?;
    for (t, (q, s)) in c.quantum.iter().zip(&c.classical).enumerate() {
        csv.row(&[
            t.to_string(),
            num(q.x),
            num(q.y),
            num(q.z),
            num(s.x),
            num(s.y),
            num(s.z),
            num(q.max_abs_diff(s)),
        ])?;
    }
    csv.finish()?;
    let results = json!({
        "j": c.j,
        "max_deviation": c.max_deviation,
        "tolerance": args.tolerance,
        "within_tolerance": c.max_deviation < args.tolerance,
    });
    write_json(
        &args.run.out,
        "meta.json",
        &Meta::new("classical", args, results),
    )?;
    Ok(())
}
