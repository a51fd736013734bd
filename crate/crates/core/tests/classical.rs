use su2_butterfly::classical::*;
use su2_butterfly::su2::SpinBasis;

fn params(alpha: f64, eta: f64) -> ClassicalParams {
    ClassicalParams::new(alpha, eta).unwrap()
}

#[test]
fn norm_is_preserved_over_a_million_periods() {
    let p = params(0.05, 75.0);
    let mut s = SphereState::from_angles(1.1, 0.4);
    let mut worst = 0.0f64;
    for _ in 0..1_000_000 {
        s = classical_step(s, &p);
        worst = worst.max((s.norm_sq() - 1.0).abs());
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn inverse_step_undoes_the_map() {
    let p = params(0.05, 30.0);
    let start = SphereState::from_angles(0.9, -0.3);
    let mut s = start;
    for _ in 0..1000 {
        s = classical_step_inverse(classical_step(s, &p), &p);
    }
    assert!(s.max_abs_diff(&start) < 1e-9);
    let fwd: Vec<_> = trajectory(start, &p, 200);
    let mut back = *fwd.last().unwrap();
    for _ in 0..200 {
        back = classical_step_inverse(back, &p);
    }
    assert!(back.max_abs_diff(&start) < 1e-9);
}

#[test]
fn x_axis_point_is_fixed() {
    let fixed = SphereState::new(1.0, 0.0, 0.0);
    for (a, e) in [(0.05, 5.0), (1.3, 75.0), (-0.4, 2.0)] {
        assert_eq!(classical_step(fixed, &params(a, e)), fixed);
    }
    let pts = poincare_section(&[fixed], &params(0.05, 75.0), 50);
    assert_eq!(pts.len(), 50);
    assert!(pts.iter().all(|p| p.y == 0.0 && p.z == 0.0));
}

#[test]
fn zero_torsion_is_a_double_rotation() {
    let p = params(0.3, 0.0);
    let s0 = SphereState::from_angles(0.7, 2.2);
    let s1 = classical_step(s0, &p);
    let (sn, cs) = 0.6f64.sin_cos();
    let expect = SphereState::new(s0.x, cs * s0.y - sn * s0.z, sn * s0.y + cs * s0.z);
    assert!(s1.max_abs_diff(&expect) < 1e-15);
    for s in trajectory(s0, &p, 100) {
        assert!((s.x - s0.x).abs() < 1e-14);
    }
}

#[test]
fn sections_are_deterministic_and_ordered() {
    let seeds = meridian_seeds(6);
    assert!(seeds.iter().all(|s| s.x > 0.0 && s.y == 0.0));
    let p = params(0.05, 30.0);
    let a = poincare_section(&seeds, &p, 300);
    let b = poincare_section(&seeds, &p, 300);
    assert_eq!(a, b);
    assert!(a
        .windows(2)
        .all(|w| (w[0].seed, w[0].period) < (w[1].seed, w[1].period)));
}

#[test]
fn chaotic_sea_fills_the_section_but_regular_orbits_do_not() {
    let seed = [SphereState::from_angles(1.2, 0.3)];
    let chaotic = section_occupancy(&poincare_section(&seed, &params(0.05, 75.0), 100_000), 50);
    let regular = section_occupancy(&poincare_section(&seed, &params(0.05, 5.0), 100_000), 50);
    assert!(chaotic > 0.5, "{chaotic}");
    assert!(regular < 0.2, "{regular}");
}

#[test]
fn coherent_state_tracks_the_classical_orbit() {
    let basis = SpinBasis::from_spin(200.0).unwrap();
    let c = correspondence(basis, &params(0.05, 5.0), 1.2, 0.3, 10).unwrap();
    assert_eq!(c.quantum.len(), 11);
    assert!(c.quantum[0].max_abs_diff(&c.classical[0]) < 1e-12);
    assert!(c.quantum[1].max_abs_diff(&c.classical[1]) < 1e-2);
}

/// ⟨x⟩ ≈ 1 − tr Σ/2 for a packet at (1, 0, 0), with Σ → MΣMᵀ under the
/// linearized map on (y, z) and Σ₀ = I/2J.
fn linearized_x(alpha: f64, eta: f64, j: f64, periods: usize) -> Vec<f64> {
    type M2 = [[f64; 2]; 2];
    let mul = |a: M2, b: M2| -> M2 {
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for k in 0..2 {
                c[i][k] = a[i][0] * b[0][k] + a[i][1] * b[1][k];
            }
        }
        c
    };
    let t = |a: M2| -> M2 { [[a[0][0], a[1][0]], [a[0][1], a[1][1]]] };
    let (s, c) = alpha.sin_cos();
    let rot = [[c, -s], [s, c]];
    let shear = |e: f64| [[1.0, e], [0.0, 1.0]];
    let m = mul(mul(shear(-eta), rot), mul(shear(eta), rot));
    let mut sigma = [[0.5 / j, 0.0], [0.0, 0.5 / j]];
    let mut out = Vec::new();
    for _ in 0..=periods {
        out.push(1.0 - (sigma[0][0] + sigma[1][1]) / 2.0);
        sigma = mul(mul(m, sigma), t(m));
    }
    out
}

#[test]
fn fixed_point_packet_breathes_without_moving() {
    let basis = SpinBasis::from_spin(200.0).unwrap();
    let c = correspondence(
        basis,
        &params(0.05, 5.0),
        std::f64::consts::FRAC_PI_2,
        0.0,
        10,
    )
    .unwrap();
    let linear = linearized_x(0.05, 5.0, 200.0, 10);
    // the oracle's offset at t = 0 is the packet's own width
    for (q, l) in c.quantum.iter().zip(&linear) {
        assert!((q.x - (l + 1.0 / 400.0)).abs() < 5e-3, "{} {}", q.x, l);
    }
    let dip = 1.0 - c.quantum.iter().map(|s| s.x).fold(1.0, f64::min);
    assert!(dip > 1e-2, "{dip}");
    assert!(c
        .quantum
        .iter()
        .all(|s| s.y.abs() < 1e-10 && s.z.abs() < 1e-10));
}

#[test]
fn correspondence_improves_with_spin() {
    let p = params(0.05, 5.0);
    let dev = |j: f64| {
        correspondence(SpinBasis::from_spin(j).unwrap(), &p, 1.2, 0.3, 10)
            .unwrap()
            .max_deviation
    };
    let (d100, d200, d1000) = (dev(100.0), dev(200.0), dev(1000.0));
    assert!(d200 <= d100);
    assert!(d1000 < d200 / 3.0, "{d200} {d1000}");
}
