use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use su2_butterfly::classical::*;
use su2_butterfly::floquet::{
    build_operator, reduce_hbar_eta, wrap_phase, FloquetParams, OperatorKind, SectorFloquet,
    FOUR_PI,
};
use su2_butterfly::multifractal::{cumulative_density, density_histogram_bins};
use su2_butterfly::su2::{build_parity, SpinBasis, SpinOperators};
use su2_butterfly::sweep::hausdorff_circle;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wrapped_phases_lie_in_the_half_open_circle(x in -1e3f64..1e3) {
        let w = wrap_phase(x);
        prop_assert!((-PI..PI).contains(&w));
        let k = ((x - w) / TAU).round();
        prop_assert!((x - w - k * TAU).abs() < 1e-9);
    }

    #[test]
    fn reduced_hbar_eta_lies_in_one_period(x in -1e3f64..1e3) {
        let r = reduce_hbar_eta(x);
        prop_assert!((0.0..FOUR_PI).contains(&r));
    }

    #[test]
    fn classical_map_is_a_norm_preserving_bijection(
        theta in 0.0f64..PI, phi in -PI..PI, alpha in -1.0f64..1.0, eta in 0.0f64..80.0,
    ) {
        let p = ClassicalParams::new(alpha, eta).unwrap();
        let s = SphereState::from_angles(theta, phi);
        let t = classical_step(s, &p);
        prop_assert!((t.norm_sq() - 1.0).abs() < 1e-12);
        prop_assert!(classical_step_inverse(t, &p).max_abs_diff(&s) < 1e-12);
    }

    #[test]
    fn floquet_operator_is_unitary_and_parity_symmetric(
        two_j in 1u32..24, alpha_scaled in 0.1f64..3.0, hbar_eta in 0.0f64..FOUR_PI,
    ) {
        let basis = SpinBasis::from_boson_number(two_j).unwrap();
        let ops = SpinOperators::new(basis);
        let params = FloquetParams::new(&basis, alpha_scaled, hbar_eta).unwrap();
        let (parity, _) = build_parity(&basis);
        for kind in [OperatorKind::Floquet, OperatorKind::KickedTop] {
            let f = build_operator(&ops, &params, kind).unwrap();
            prop_assert!(f.unitarity_residual() < 1e-10);
            prop_assert!(f.commutator(&parity).max_abs() < 1e-10);
        }
    }

    #[test]
    fn spectrum_is_mirror_symmetric_in_hbar_eta(two_j in 1u32..30, hbar_eta in 0.0f64..TAU) {
        let basis = SpinBasis::from_boson_number(two_j).unwrap();
        let system = SectorFloquet::new(basis, 1.0).unwrap();
        let a = system.spectrum(OperatorKind::Floquet, hbar_eta, false).unwrap().phases();
        let b = system.spectrum(OperatorKind::Floquet, FOUR_PI - hbar_eta, false).unwrap().phases();
        prop_assert!(hausdorff_circle(&a, &b) < 1e-9);
    }

    #[test]
    fn histogram_refinement_conserves_counts(
        phases in prop::collection::vec(-PI..PI, 1..500), k in 0u32..10,
    ) {
        let coarse = density_histogram_bins(&phases, 1 << k).unwrap();
        let fine = density_histogram_bins(&phases, 2 << k).unwrap();
        prop_assert_eq!(coarse.counts.iter().sum::<u64>(), phases.len() as u64);
        for (i, &c) in coarse.counts.iter().enumerate() {
            prop_assert_eq!(c, fine.counts[2 * i] + fine.counts[2 * i + 1]);
        }
    }

    #[test]
    fn staircase_is_monotone_and_normalized(
        phases in prop::collection::vec(-PI..PI, 1..300), a in -PI..PI, b in -PI..PI,
    ) {
        let s = cumulative_density(&phases);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(s.eval(lo) <= s.eval(hi));
        prop_assert_eq!(s.eval(PI), 1.0);
        prop_assert!(s.eval(-PI - 1e-9) == 0.0);
    }
}
