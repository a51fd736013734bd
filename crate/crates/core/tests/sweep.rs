use std::f64::consts::TAU;

use su2_butterfly::floquet::{OperatorKind, FOUR_PI};
use su2_butterfly::su2::SpinBasis;
use su2_butterfly::sweep::*;
use su2_butterfly::Error;

fn spin(j: f64) -> SpinBasis {
    SpinBasis::from_spin(j).unwrap()
}

#[test]
fn collapse_point_is_a_single_record_at_zero() {
    let plan = SweepPlan::new(spin(20.0), 1.0, vec![TAU], OperatorKind::Floquet).unwrap();
    let records = run_sweep(&plan).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].len(), 41);
    assert!(records[0].phases.iter().all(|p| p.abs() < 1e-8));
}

#[test]
fn half_integer_spin_does_not_collapse() {
    let plan = SweepPlan::new(spin(20.5), 1.0, vec![TAU], OperatorKind::Floquet).unwrap();
    let records = run_sweep(&plan).unwrap();
    let max = records[0].phases.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    assert!(max > 1e-2);
}

#[test]
fn mirrored_pair_has_equal_spectra() {
    let x = 1.234;
    let plan =
        SweepPlan::new(spin(20.0), 1.0, vec![x, FOUR_PI - x], OperatorKind::Floquet).unwrap();
    let records = run_sweep(&plan).unwrap();
    assert!(hausdorff_circle(&records[0].phases, &records[1].phases) < 1e-8);
    let mut a = records[0].phases.clone();
    let mut b = records[1].phases.clone();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-8));
}

#[test]
fn symmetric_grid_report() {
    for j in [5.0, 20.5] {
        let plan = SweepPlan::uniform(spin(j), 1.0, 40, OperatorKind::Floquet).unwrap();
        let records = run_sweep(&plan).unwrap();
        let report = symmetry_report(&records).unwrap();
        assert_eq!(report.pairs.len(), 40);
        assert!(report.max_distance < 1e-8, "J={j}: {}", report.max_distance);
    }
}

#[test]
fn unpaired_point_is_rejected() {
    let plan = SweepPlan::new(
        spin(5.0),
        1.0,
        vec![1.0, FOUR_PI - 1.0, 2.0],
        OperatorKind::Floquet,
    )
    .unwrap();
    let records = run_sweep(&plan).unwrap();
    assert_eq!(
        symmetry_report(&records).unwrap_err(),
        Error::GridNotSymmetric(2.0)
    );
}

#[test]
fn records_follow_grid_order_and_size() {
    let grid = vec![3.0, 0.5, 11.0, 7.0, 0.5];
    let plan = SweepPlan::new(spin(3.5), 1.0, grid.clone(), OperatorKind::Floquet).unwrap();
    let records = run_sweep(&plan).unwrap();
    let hs: Vec<f64> = records.iter().map(|r| r.hbar_eta).collect();
    assert_eq!(hs, grid);
    assert!(records
        .iter()
        .all(|r| r.len() == 8 && r.parities.len() == 8));
    assert!(records
        .iter()
        .all(|r| r.phases.windows(2).all(|w| w[0] <= w[1])));
    assert_eq!(records[1], records[4]);
}

#[test]
fn grid_is_reduced_and_validated() {
    let plan = SweepPlan::new(
        spin(1.0),
        1.0,
        vec![FOUR_PI + 1.0, -1.0],
        OperatorKind::Floquet,
    )
    .unwrap();
    assert!((plan.grid[0] - 1.0).abs() < 1e-12);
    assert!((plan.grid[1] - (FOUR_PI - 1.0)).abs() < 1e-12);
    assert!(SweepPlan::new(spin(1.0), 1.0, vec![], OperatorKind::Floquet).is_err());
    assert!(SweepPlan::new(spin(1.0), 1.0, vec![f64::NAN], OperatorKind::Floquet).is_err());
}

#[test]
fn fprime_sweep_matches_floquet_under_condition() {
    for (j, period) in [(4.0, TAU), (4.5, 4.0 * TAU)] {
        let grid = uniform_grid(16);
        let f =
            run_sweep(&SweepPlan::new(spin(j), 1.0, grid.clone(), OperatorKind::Floquet).unwrap())
                .unwrap();
        let g = run_sweep(
            &SweepPlan::new(
                spin(j),
                1.0,
                grid,
                OperatorKind::Fprime {
                    gamma: 3.0 * period,
                },
            )
            .unwrap(),
        )
        .unwrap();
        for (a, b) in f.iter().zip(&g) {
            assert!(hausdorff_circle(&a.phases, &b.phases) < 1e-8);
        }
    }
}

#[test]
fn residuals_are_reported_with_vectors() {
    let plan = SweepPlan::uniform(spin(10.0), 1.0, 8, OperatorKind::Floquet)
        .unwrap()
        .with_vectors(true);
    let records = run_sweep(&plan).unwrap();
    assert!(records.iter().all(|r| r.max_residual.unwrap() < 1e-8));
    let summary = invariant_summary(&plan, &records).unwrap();
    assert_eq!(summary.points_checked, 3);
    assert!(summary.max_unitarity_residual < 1e-10);
    assert!(summary.max_parity_residual < 1e-10);
    assert!(summary.max_eigen_residual.unwrap() < 1e-8);
}

#[test]
fn kicked_top_sweep_runs() {
    let plan = SweepPlan::uniform(spin(6.0), 1.0, 4, OperatorKind::KickedTop).unwrap();
    let records = run_sweep(&plan).unwrap();
    assert_eq!(records.len(), 4);
    assert!(records.iter().all(|r| r.len() == 13));
}

#[test]
fn partial_outcome_reports_success() {
    let plan = SweepPlan::uniform(spin(2.0), 1.0, 4, OperatorKind::Floquet).unwrap();
    let outcome = run_sweep_partial(&plan);
    assert!(outcome.failure.is_none());
    assert_eq!(outcome.records.len(), 4);
}
