//! Mean-field limit of the double-kicked top: an area-preserving map of the
//! unit sphere built from exact rotations, its Poincaré sections, and a
//! comparison with coherent-state propagation.

use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{build_floquet, FloquetParams};
use crate::su2::{coherent_state, SpinBasis, SpinOperators};

/// Scaled spin (Jx, Jy, Jz)/J on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SphereState {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Polar angle from +z, azimuth from +x.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self::new(
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        )
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    fn rotate_x(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(self.x, c * self.y - s * self.z, s * self.y + c * self.z)
    }

    fn rotate_z(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalParams {
    pub alpha: f64,
    pub eta: f64,
}

impl ClassicalParams {
    pub fn new(alpha: f64, eta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("eta", eta)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be finite".into(),
                });
            }
        }
        Ok(Self { alpha, eta })
    }
}

/// One period: x-rotation by α, torsion by +ηz, x-rotation by α, torsion by −ηz.
pub fn classical_step(s: SphereState, p: &ClassicalParams) -> SphereState {
    let s = s.rotate_x(p.alpha);
    let s = s.rotate_z(p.eta * s.z);
    let s = s.rotate_x(p.alpha);
    s.rotate_z(-p.eta * s.z)
}

/// Exact inverse of [`classical_step`].
pub fn classical_step_inverse(s: SphereState, p: &ClassicalParams) -> SphereState {
    // torsions leave z unchanged, so the angle is read off the current state
    let s = s.rotate_z(p.eta * s.z);
    let s = s.rotate_x(-p.alpha);
    let s = s.rotate_z(-p.eta * s.z);
    s.rotate_x(-p.alpha)
}

pub fn trajectory(seed: SphereState, p: &ClassicalParams, periods: usize) -> Vec<SphereState> {
    let mut out = Vec::with_capacity(periods + 1);
    let mut s = seed;
    out.push(s);
    for _ in 0..periods {
        s = classical_step(s, p);
        out.push(s);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub seed: usize,
    pub period: usize,
    pub y: f64,
    pub z: f64,
}

/// (y, z) after every period with x > 0, seeds in input order.
pub fn poincare_section(
    seeds: &[SphereState],
    p: &ClassicalParams,
    periods: usize,
) -> Vec<SectionPoint> {
    seeds
        .par_iter()
        .enumerate()
        .map(|(seed, &start)| {
            let mut s = start;
            let mut pts = Vec::new();
            for period in 1..=periods {
                s = classical_step(s, p);
                if s.x > 0.0 {
                    pts.push(SectionPoint {
                        seed,
                        period,
                        y: s.y,
                        z: s.z,
                    });
                }
            }
            pts
        })
        .flatten()
        .collect()
}

/// `count` seeds on the meridian through (1, 0, 0) and the poles, x > 0.
pub fn meridian_seeds(count: usize) -> Vec<SphereState> {
    (0..count)
        .map(|i| {
            let beta = -std::f64::consts::FRAC_PI_2
                + std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
            SphereState::new(beta.cos(), 0.0, beta.sin())
        })
        .collect()
}

/// Fraction of `grid`×`grid` cells over [−1, 1]² with centre in the unit
/// disk that hold at least one section point.
pub fn section_occupancy(points: &[SectionPoint], grid: usize) -> f64 {
    let cell = |v: f64| {
        (((v + 1.0) / 2.0 * grid as f64).floor() as i64).clamp(0, grid as i64 - 1) as usize
    };
    let centre = |i: usize| -1.0 + (i as f64 + 0.5) * 2.0 / grid as f64;
    let inside = |i: usize, j: usize| centre(i).powi(2) + centre(j).powi(2) <= 1.0;
    let mut hit = vec![false; grid * grid];
    for p in points {
        hit[cell(p.y) * grid + cell(p.z)] = true;
    }
    let mut total = 0usize;
    let mut filled = 0usize;
    for i in 0..grid {
        for j in 0..grid {
            if inside(i, j) {
                total += 1;
                filled += usize::from(hit[i * grid + j]);
            }
        }
    }
    filled as f64 / total as f64
}

/// ⟨J⟩/J for a normalized state.
pub fn spin_expectation(ops: &SpinOperators, psi: &[c64]) -> SphereState {
    let j = ops.basis().j();
    let [x, y, z] = ops.expectation(psi);
    SphereState::new(x / j, y / j, z / j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub j: f64,
    pub quantum: Vec<SphereState>,
    pub classical: Vec<SphereState>,
    /// Largest per-component difference over all recorded periods.
    pub max_deviation: f64,
}

/// Propagates a coherent state with F at ħ_η = η/J, α·J = α·J and compares
/// ⟨J⟩/J with the classical orbit started at the same point.
pub fn correspondence(
    basis: SpinBasis,
    params: &ClassicalParams,
    theta: f64,
    phi: f64,
    periods: usize,
) -> Result<Correspondence> {
    let j = basis.j();
    let ops = SpinOperators::new(basis);
    let fp = FloquetParams::new_unreduced(&basis, params.alpha * j, params.eta / j)?;
    let f = build_floquet(&ops, &fp)?;
    let mut psi = coherent_state(&basis, theta, phi);
    let mut quantum = vec![spin_expectation(&ops, &psi)];
    for _ in 0..periods {
        psi = f.apply(&psi);
        quantum.push(spin_expectation(&ops, &psi));
    }
    let classical = trajectory(SphereState::from_angles(theta, phi), params, periods);
    let max_deviation = quantum
        .iter()
        .zip(&classical)
        .map(|(q, c)| q.max_abs_diff(c))
        .fold(0.0, f64::max);
    Ok(Correspondence {
        j,
        quantum,
        classical,
        max_deviation,
    })
}
