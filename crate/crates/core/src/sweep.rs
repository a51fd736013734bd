//! Eigen-phase spectra over a grid of ħ_η (butterfly datasets) and their
//! reflection symmetry about ħ_η = 2π.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{
    build_operator, reduce_hbar_eta, wrap_phase, FloquetParams, OperatorKind, SectorFloquet,
    FOUR_PI,
};
use crate::su2::{build_parity, Parity, SpinBasis, SpinOperators};

/// `n` equally spaced values `k·4π/n`, k = 0…n−1.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * FOUR_PI / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub basis: SpinBasis,
    pub alpha_scaled: f64,
    pub grid: Vec<f64>,
    pub want_vectors: bool,
    pub operator: OperatorKind,
}

impl SweepPlan {
    /// Validates the grid and reduces every value into [0, 4π).
    pub fn new(
        basis: SpinBasis,
        alpha_scaled: f64,
        grid: Vec<f64>,
        operator: OperatorKind,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "grid is empty".into(),
            });
        }
        if let Some(x) = grid.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("non-finite value {x}"),
            });
        }
        if !alpha_scaled.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha_scaled",
                reason: "must be finite".into(),
            });
        }
        if let OperatorKind::Fprime { gamma } = operator {
            if !gamma.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "gamma",
                    reason: "must be finite".into(),
                });
            }
        }
        Ok(Self {
            basis,
            alpha_scaled,
            grid: grid.into_iter().map(reduce_hbar_eta).collect(),
            want_vectors: false,
            operator,
        })
    }

    /// Uniform grid of `points` values over [0, 4π).
    pub fn uniform(
        basis: SpinBasis,
        alpha_scaled: f64,
        points: usize,
        operator: OperatorKind,
    ) -> Result<Self> {
        Self::new(basis, alpha_scaled, uniform_grid(points), operator)
    }

    /// Also diagonalize for eigenvectors, which enables the per-point residual check.
    pub fn with_vectors(mut self, want: bool) -> Self {
        self.want_vectors = want;
        self
    }
}

/// The spectrum at one grid point, phases ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub hbar_eta: f64,
    pub phases: Vec<f64>,
    pub parities: Vec<Parity>,
    /// Largest ‖Fv − e^{−iε}v‖ over the eigenpairs, when vectors were computed.
    pub max_residual: Option<f64>,
}

impl SweepRecord {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, Parity)> + '_ {
        self.phases
            .iter()
            .copied()
            .zip(self.parities.iter().copied())
    }
}

/// Records for every grid point before the first failure, and that failure.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub failure: Option<Error>,
}

impl SweepOutcome {
    pub fn into_result(self) -> Result<Vec<SweepRecord>> {
        match self.failure {
            None => Ok(self.records),
            Some(e) => Err(e),
        }
    }
}

/// Computes every grid point; output is in grid order whatever the scheduling.
pub fn run_sweep_partial(plan: &SweepPlan) -> SweepOutcome {
    let system = match SectorFloquet::new(plan.basis, plan.alpha_scaled) {
        Ok(s) => s,
        Err(e) => {
            return SweepOutcome {
                records: Vec::new(),
                failure: Some(e),
            }
        }
    };
    let results: Vec<Result<SweepRecord>> = plan
        .grid
        .par_iter()
        .map(|&h| {
            let set = system
                .spectrum_raw(plan.operator, h, plan.want_vectors)
                .map_err(|e| Error::SweepPoint {
                    hbar_eta: h,
                    source: Box::new(e),
                })?;
            let (phases, parities) = set.combined().into_iter().unzip();
            Ok(SweepRecord {
                hbar_eta: h,
                phases,
                parities,
                max_residual: set.max_residual,
            })
        })
        .collect();
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                return SweepOutcome {
                    records,
                    failure: Some(e),
                }
            }
        }
    }
    SweepOutcome {
        records,
        failure: None,
    }
}

pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<SweepRecord>> {
    run_sweep_partial(plan).into_result()
}

/// Symmetric Hausdorff distance between two phase sets on the circle.
pub fn hausdorff_circle(a: &[f64], b: &[f64]) -> f64 {
    let one_way = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|&p| {
                y.iter()
                    .map(|&q| wrap_phase(p - q).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    one_way(a, b).max(one_way(b, a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorPair {
    pub hbar_eta: f64,
    pub mirror: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub pairs: Vec<MirrorPair>,
    pub max_distance: f64,
}

/// Pairs each record at x with the one at 4π − x and compares their spectra.
pub fn symmetry_report(records: &[SweepRecord]) -> Result<SymmetryReport> {
    const MATCH: f64 = 1e-9;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].hbar_eta.total_cmp(&records[b].hbar_eta));
    let sorted: Vec<f64> = order.iter().map(|&i| records[i].hbar_eta).collect();
    let find = |x: f64| -> Option<usize> {
        let target = reduce_hbar_eta(x);
        let pos = sorted.partition_point(|&v| v < target - MATCH);
        let near = |k: usize| {
            let d = (sorted[k] - target).abs();
            d.min(FOUR_PI - d) <= MATCH
        };
        if pos < sorted.len() && near(pos) {
            return Some(order[pos]);
        }
        // partner across the 0 ≡ 4π seam
        if !sorted.is_empty() && near(sorted.len() - 1) {
            return Some(order[sorted.len() - 1]);
        }
        if !sorted.is_empty() && near(0) {
            return Some(order[0]);
        }
        None
    };
    let mut pairs = Vec::new();
    let mut max_distance = 0.0f64;
    for r in records {
        let j = find(FOUR_PI - r.hbar_eta).ok_or(Error::GridNotSymmetric(r.hbar_eta))?;
        let distance = hausdorff_circle(&r.phases, &records[j].phases);
        max_distance = max_distance.max(distance);
        pairs.push(MirrorPair {
            hbar_eta: r.hbar_eta,
            mirror: records[j].hbar_eta,
            distance,
        });
    }
    Ok(SymmetryReport {
        pairs,
        max_distance,
    })
}

/// Dense-operator checks at a few grid points: U†U − I and the parity
/// off-diagonal block, both as max-norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSummary {
    pub points_checked: usize,
    pub max_unitarity_residual: f64,
    pub max_parity_residual: f64,
    pub max_eigen_residual: Option<f64>,
}

/// Checks the first, middle and last grid points of a plan on the dense operator.
pub fn invariant_summary(plan: &SweepPlan, records: &[SweepRecord]) -> Result<InvariantSummary> {
    let ops = SpinOperators::new(plan.basis);
    let (_, pb) = build_parity(&plan.basis);
    let mut picks = vec![0, plan.grid.len() / 2, plan.grid.len() - 1];
    picks.dedup();
    let mut unitarity = 0.0f64;
    let mut parity = 0.0f64;
    for &k in &picks {
        let params = FloquetParams::new(&plan.basis, plan.alpha_scaled, plan.grid[k])?;
        let f = build_operator(&ops, &params, plan.operator)?;
        unitarity = unitarity.max(f.unitarity_residual());
        let a = f.as_ref();
        for (r, c) in [(Parity::Even, Parity::Odd), (Parity::Odd, Parity::Even)] {
            let off = pb.project(a, r, c);
            for j in 0..off.ncols() {
                for i in 0..off.nrows() {
                    parity = parity.max(off[(i, j)].norm());
                }
            }
        }
    }
    let eigen = records
        .iter()
        .filter_map(|r| r.max_residual)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
    Ok(InvariantSummary {
        points_checked: picks.len(),
        max_unitarity_residual: unitarity,
        max_parity_residual: parity,
        max_eigen_residual: eigen,
    })
}
