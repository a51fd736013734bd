//! Floquet operators of the double-kicked top and their eigen-phases.
//!
//! With `T± = e^{±i(ħ_η/2)Jz²}` and `R = e^{−iαJx}` the one-period operator is
//! `F = T⁺ R T⁻ R`. Eigen-phases follow `F|n⟩ = e^{−iε}|n⟩` with ε ∈ [−π, π).
//!
//! Jz² and Jx both commute with the exchange parity `|m⟩ → |−m⟩`, so every
//! operator here is block diagonal in the even/odd basis. [`SectorFloquet`]
//! builds the blocks directly; the dense builders exist for small-J checks and
//! for the operator identities.

use std::f64::consts::{PI, TAU};

use faer::{c64, Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::su2::{
    build_jminus, build_jplus, ComplexMatrix, HermitianEigen, MatrixKind, Parity, ParityBasis,
    SpinBasis, SpinOperators, Tolerances,
};

pub const FOUR_PI: f64 = 2.0 * TAU;

/// Wraps a phase into [−π, π).
pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y >= PI {
        y - TAU
    } else {
        y
    }
}

/// Kick strength α and scaled torsion ħ_η = η/J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetParams {
    pub alpha: f64,
    pub hbar_eta: f64,
    pub alpha_scaled: f64,
}

impl FloquetParams {
    /// `alpha_scaled = α·J`; `hbar_eta` is reduced into [0, 4π).
    pub fn new(basis: &SpinBasis, alpha_scaled: f64, hbar_eta: f64) -> Result<Self> {
        let p = Self::new_unreduced(basis, alpha_scaled, hbar_eta)?;
        Ok(Self {
            hbar_eta: reduce_hbar_eta(p.hbar_eta),
            ..p
        })
    }

    /// Keeps `hbar_eta` as given; used to check that the reduction is harmless.
    pub fn new_unreduced(basis: &SpinBasis, alpha_scaled: f64, hbar_eta: f64) -> Result<Self> {
        if !alpha_scaled.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha_scaled",
                reason: format!("{alpha_scaled} is not finite"),
            });
        }
        if !hbar_eta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "hbar_eta",
                reason: format!("{hbar_eta} is not finite"),
            });
        }
        Ok(Self {
            alpha: alpha_scaled / basis.j(),
            hbar_eta,
            alpha_scaled,
        })
    }

    pub fn with_hbar_eta(&self, hbar_eta: f64) -> Self {
        Self {
            hbar_eta: reduce_hbar_eta(hbar_eta),
            ..*self
        }
    }
}

pub fn reduce_hbar_eta(x: f64) -> f64 {
    let r = x.rem_euclid(FOUR_PI);
    if r >= FOUR_PI {
        0.0
    } else {
        r
    }
}

/// Parameters of the continuously-interacting variant F′.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FPrimeParams {
    pub base: FloquetParams,
    /// 4·g0·τ/ξ
    pub gamma: f64,
}

impl FPrimeParams {
    pub fn new(base: FloquetParams, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("{gamma} is not finite"),
            });
        }
        Ok(Self { base, gamma })
    }

    /// Whether e^{−iγJz²} is the identity: γ = 2kπ for integer J, 8kπ otherwise.
    pub fn reduces_to_floquet(&self, basis: &SpinBasis) -> bool {
        let period = if basis.is_integer() { TAU } else { 4.0 * TAU };
        let k = self.gamma / period;
        (k - k.round()).abs() < 1e-12
    }
}

/// Which one-period operator to build.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    Floquet,
    KickedTop,
    Fprime { gamma: f64 },
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Floquet => "floquet",
            OperatorKind::KickedTop => "kicked_top",
            OperatorKind::Fprime { .. } => "fprime",
        }
    }
}

/// Diagonal entries e^{sign·i·(ħ_η/2)·m²}.
pub fn torsion_phases(m_squared: &[f64], hbar_eta: f64, sign: f64) -> Vec<c64> {
    m_squared
        .iter()
        .map(|&m2| c64::from_polar(1.0, sign * 0.5 * hbar_eta * m2))
        .collect()
}

fn m_squared(basis: &SpinBasis) -> Vec<f64> {
    basis.m_values().into_iter().map(|m| m * m).collect()
}

/// `diag(left) · A · diag(right)`
fn scale_rows_cols(a: MatRef<'_, c64>, left: &[c64], right: &[c64]) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| left[i] * a[(i, j)] * right[j])
}

/// F = T⁺ R T⁻ R in the |m⟩ basis.
pub fn build_floquet(ops: &SpinOperators, params: &FloquetParams) -> Result<ComplexMatrix> {
    let m2 = m_squared(ops.basis());
    let r = ops.rotate_x(params.alpha)?;
    let tp = torsion_phases(&m2, params.hbar_eta, 1.0);
    let tm = torsion_phases(&m2, params.hbar_eta, -1.0);
    let left = scale_rows_cols(r.as_ref(), &tp, &tm);
    Ok(ComplexMatrix::new(&left * r.as_ref(), MatrixKind::Unitary))
}

/// F′ = T⁺ e^{−iγJz²} R T⁻ R.
pub fn build_fprime(ops: &SpinOperators, params: &FPrimeParams) -> Result<ComplexMatrix> {
    let m2 = m_squared(ops.basis());
    let base = &params.base;
    let r = ops.rotate_x(base.alpha)?;
    let tp: Vec<c64> = torsion_phases(&m2, base.hbar_eta, 1.0)
        .into_iter()
        .zip(&m2)
        .map(|(t, &m2)| t * c64::from_polar(1.0, -params.gamma * m2))
        .collect();
    let tm = torsion_phases(&m2, base.hbar_eta, -1.0);
    let left = scale_rows_cols(r.as_ref(), &tp, &tm);
    Ok(ComplexMatrix::new(&left * r.as_ref(), MatrixKind::Unitary))
}

/// The single kicked top T⁺ R.
pub fn build_kicked_top(ops: &SpinOperators, params: &FloquetParams) -> Result<ComplexMatrix> {
    let m2 = m_squared(ops.basis());
    let r = ops.rotate_x(params.alpha)?;
    let tp = torsion_phases(&m2, params.hbar_eta, 1.0);
    let ones = vec![c64::new(1.0, 0.0); m2.len()];
    Ok(ComplexMatrix::new(
        scale_rows_cols(r.as_ref(), &tp, &ones),
        MatrixKind::Unitary,
    ))
}

pub fn build_operator(
    ops: &SpinOperators,
    params: &FloquetParams,
    kind: OperatorKind,
) -> Result<ComplexMatrix> {
    match kind {
        OperatorKind::Floquet => build_floquet(ops, params),
        OperatorKind::KickedTop => build_kicked_top(ops, params),
        OperatorKind::Fprime { gamma } => build_fprime(ops, &FPrimeParams::new(*params, gamma)?),
    }
}

/// Max-norm difference between `T⁺ R T⁻` and its dressed-generator form
/// `exp(−iα{(J+/2)·e^{iħ_η(2Jz+1)/2} + h.c.})`.
pub fn verify_dressed_identity(ops: &SpinOperators, params: &FloquetParams) -> Result<f64> {
    let basis = ops.basis();
    let m2 = m_squared(basis);
    let r = ops.rotate_x(params.alpha)?;
    let lhs = scale_rows_cols(
        r.as_ref(),
        &torsion_phases(&m2, params.hbar_eta, 1.0),
        &torsion_phases(&m2, params.hbar_eta, -1.0),
    );

    // J+ acts after the Jz-dependent phase, so the phase is evaluated at the ket's m.
    let dressing: Vec<c64> = basis
        .m_values()
        .into_iter()
        .map(|m| c64::from_polar(1.0, params.hbar_eta * (2.0 * m + 1.0) / 2.0))
        .collect();
    let ones = vec![c64::new(1.0, 0.0); dressing.len()];
    let half = c64::new(0.5, 0.0);
    let raising = scale_rows_cols(build_jplus(basis).as_ref(), &ones, &dressing);
    let conj: Vec<c64> = dressing.iter().map(|d| d.conj()).collect();
    let lowering = scale_rows_cols(build_jminus(basis).as_ref(), &conj, &ones);
    let n = basis.dim();
    let exponent = Mat::from_fn(n, n, |i, j| (raising[(i, j)] + lowering[(i, j)]) * half);
    let rhs = HermitianEigen::new(exponent.as_ref())?.exp(params.alpha);

    Ok(crate::su2::max_abs_diff(lhs.as_ref(), rhs.as_ref()))
}

/// Eigen-phases of one parity sector, nondecreasing.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub parity: Parity,
    pub phases: Vec<f64>,
    /// Eigenvectors as columns, in the sector's parity-adapted basis.
    pub vectors: Option<Mat<c64>>,
}

impl SectorSpectrum {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn vector(&self, k: usize) -> Option<Vec<c64>> {
        let v = self.vectors.as_ref()?;
        Some((0..v.nrows()).map(|i| v[(i, k)]).collect())
    }
}

/// Eigen-phases of one operator at one parameter point, split by parity.
#[derive(Debug, Clone)]
pub struct EigenphaseSet {
    pub two_j: u32,
    pub params: FloquetParams,
    pub kind: OperatorKind,
    pub even: SectorSpectrum,
    pub odd: SectorSpectrum,
    /// Largest ‖Fv − e^{−iε}v‖ over all pairs, when vectors were computed.
    pub max_residual: Option<f64>,
}

impl EigenphaseSet {
    pub fn sector(&self, parity: Parity) -> &SectorSpectrum {
        match parity {
            Parity::Even => &self.even,
            Parity::Odd => &self.odd,
        }
    }

    pub fn len(&self) -> usize {
        self.even.len() + self.odd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All (ε, parity) pairs ordered by phase, even before odd on ties.
    pub fn combined(&self) -> Vec<(f64, Parity)> {
        let mut all: Vec<(f64, Parity)> = self
            .even
            .phases
            .iter()
            .map(|&e| (e, Parity::Even))
            .chain(self.odd.phases.iter().map(|&e| (e, Parity::Odd)))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all
    }

    pub fn phases(&self) -> Vec<f64> {
        self.combined().into_iter().map(|(e, _)| e).collect()
    }

    pub fn max_abs_phase(&self) -> f64 {
        self.even
            .phases
            .iter()
            .chain(&self.odd.phases)
            .fold(0.0f64, |m, e| m.max(e.abs()))
    }
}

/// Diagonalizes one unitary block; phases sorted ascending with vectors permuted alike.
pub fn diagonalize_block(
    block: MatRef<'_, c64>,
    parity: Parity,
    want_vectors: bool,
    tol: &Tolerances,
) -> Result<(SectorSpectrum, Option<f64>)> {
    let n = block.nrows();
    if n == 0 {
        return Ok((
            SectorSpectrum {
                parity,
                phases: Vec::new(),
                vectors: want_vectors.then(|| Mat::zeros(0, 0)),
            },
            want_vectors.then_some(0.0),
        ));
    }
    let (values, vectors) = if want_vectors {
        let evd = block.eigen().map_err(|_| Error::ConvergenceFailure)?;
        let s = evd.S();
        let values: Vec<c64> = (0..n).map(|i| s[i]).collect();
        (values, Some(evd.U().to_owned()))
    } else {
        (
            block.eigenvalues().map_err(|_| Error::ConvergenceFailure)?,
            None,
        )
    };

    let mut worst = 0.0f64;
    for v in &values {
        worst = worst.max((v.norm() - 1.0).abs());
    }
    if worst > tol.unit_circle {
        return Err(Error::NonUnitary { deviation: worst });
    }

    let raw: Vec<f64> = values.iter().map(|v| phase_of(*v)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let phases: Vec<f64> = order.iter().map(|&k| raw[k]).collect();

    let mut residual = None;
    let vectors = vectors.map(|u| {
        let mut sorted = Mat::<c64>::from_fn(n, n, |i, k| u[(i, order[k])]);
        for k in 0..n {
            let norm: f64 = (0..n)
                .map(|i| sorted[(i, k)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            for i in 0..n {
                sorted[(i, k)] /= norm;
            }
        }
        let fv = block * &sorted;
        let mut worst = 0.0f64;
        for k in 0..n {
            let lambda = c64::from_polar(1.0, -phases[k]);
            let r: f64 = (0..n)
                .map(|i| (fv[(i, k)] - lambda * sorted[(i, k)]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        residual = Some(worst);
        sorted
    });

    Ok((
        SectorSpectrum {
            parity,
            phases,
            vectors,
        },
        residual,
    ))
}

/// ε = −arg λ, mapped into [−π, π).
fn phase_of(lambda: c64) -> f64 {
    wrap_phase(-lambda.arg())
}

/// Eigen-phases of a dense parity-symmetric unitary, diagonalized per sector.
pub fn eigenphases(
    f: &ComplexMatrix,
    basis: &SpinBasis,
    parity: &ParityBasis,
    params: FloquetParams,
    kind: OperatorKind,
    want_vectors: bool,
    tol: &Tolerances,
) -> Result<EigenphaseSet> {
    let a = f.as_ref();
    let off = parity.project(a, Parity::Even, Parity::Odd);
    let off2 = parity.project(a, Parity::Odd, Parity::Even);
    let mut off_block = 0.0f64;
    for m in [&off, &off2] {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                off_block = off_block.max(m[(i, j)].norm());
            }
        }
    }
    if off_block > tol.parity_block {
        return Err(Error::ParityViolation { off_block });
    }
    let even_block = parity.project(a, Parity::Even, Parity::Even);
    let odd_block = parity.project(a, Parity::Odd, Parity::Odd);
    let (even, re) = diagonalize_block(even_block.as_ref(), Parity::Even, want_vectors, tol)?;
    let (odd, ro) = diagonalize_block(odd_block.as_ref(), Parity::Odd, want_vectors, tol)?;
    Ok(EigenphaseSet {
        two_j: basis.two_j(),
        params,
        kind,
        even,
        odd,
        max_residual: re.zip(ro).map(|(a, b)| a.max(b)),
    })
}

/// Eigen-phases of a dense unitary without any parity splitting.
pub fn eigenphases_unsplit(f: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<f64>> {
    let (s, _) = diagonalize_block(f.as_ref(), Parity::Even, false, tol)?;
    Ok(s.phases)
}

/// Per-sector pieces of F for one spin and one kick strength.
///
/// The rotation block `R_s = e^{−iαJx}` restricted to each sector is computed
/// once from the sector's real symmetric Jx block; afterwards every ħ_η costs
/// one block product and one eigen-decomposition.
#[derive(Debug, Clone)]
pub struct SectorFloquet {
    basis: SpinBasis,
    alpha_scaled: f64,
    parity: ParityBasis,
    sectors: [SectorRotation; 2],
    tol: Tolerances,
}

#[derive(Debug, Clone)]
struct SectorRotation {
    m_squared: Vec<f64>,
    rotation: Mat<c64>,
}

impl SectorFloquet {
    pub fn new(basis: SpinBasis, alpha_scaled: f64) -> Result<Self> {
        let parity = ParityBasis::new(&basis);
        let alpha = FloquetParams::new(&basis, alpha_scaled, 0.0)?.alpha;
        let make = |p: Parity| -> Result<SectorRotation> {
            let jx = sector_jx(&basis, &parity, p);
            let rotation = real_symmetric_exp(jx.as_ref(), alpha)?;
            Ok(SectorRotation {
                m_squared: parity.m_squared(p),
                rotation,
            })
        };
        let sectors = [make(Parity::Even)?, make(Parity::Odd)?];
        Ok(Self {
            basis,
            alpha_scaled,
            parity,
            sectors,
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn basis(&self) -> &SpinBasis {
        &self.basis
    }

    pub fn parity_basis(&self) -> &ParityBasis {
        &self.parity
    }

    pub fn alpha_scaled(&self) -> f64 {
        self.alpha_scaled
    }

    pub fn params(&self, hbar_eta: f64) -> FloquetParams {
        FloquetParams {
            alpha: self.alpha_scaled / self.basis.j(),
            hbar_eta: reduce_hbar_eta(hbar_eta),
            alpha_scaled: self.alpha_scaled,
        }
    }

    fn rot(&self, parity: Parity) -> &SectorRotation {
        match parity {
            Parity::Even => &self.sectors[0],
            Parity::Odd => &self.sectors[1],
        }
    }

    /// The sector block of the requested operator at `hbar_eta` (used as given).
    pub fn block(&self, kind: OperatorKind, parity: Parity, hbar_eta: f64) -> Mat<c64> {
        let s = self.rot(parity);
        let tp = torsion_phases(&s.m_squared, hbar_eta, 1.0);
        let r = s.rotation.as_ref();
        match kind {
            OperatorKind::KickedTop => {
                let ones = vec![c64::new(1.0, 0.0); tp.len()];
                scale_rows_cols(r, &tp, &ones)
            }
            OperatorKind::Floquet => {
                let tm = torsion_phases(&s.m_squared, hbar_eta, -1.0);
                scale_rows_cols(r, &tp, &tm) * r
            }
            OperatorKind::Fprime { gamma } => {
                let tm = torsion_phases(&s.m_squared, hbar_eta, -1.0);
                let tpg: Vec<c64> = tp
                    .iter()
                    .zip(&s.m_squared)
                    .map(|(t, &m2)| t * c64::from_polar(1.0, -gamma * m2))
                    .collect();
                scale_rows_cols(r, &tpg, &tm) * r
            }
        }
    }

    /// Spectrum at `hbar_eta`, which is reduced into [0, 4π) first.
    pub fn spectrum(
        &self,
        kind: OperatorKind,
        hbar_eta: f64,
        want_vectors: bool,
    ) -> Result<EigenphaseSet> {
        self.spectrum_raw(kind, reduce_hbar_eta(hbar_eta), want_vectors)
    }

    /// Spectrum with `hbar_eta` used exactly as given.
    pub fn spectrum_raw(
        &self,
        kind: OperatorKind,
        hbar_eta: f64,
        want_vectors: bool,
    ) -> Result<EigenphaseSet> {
        let sector = |parity| {
            diagonalize_block(
                self.block(kind, parity, hbar_eta).as_ref(),
                parity,
                want_vectors,
                &self.tol,
            )
        };
        let (even, odd) = rayon::join(|| sector(Parity::Even), || sector(Parity::Odd));
        let ((even, re), (odd, ro)) = (even?, odd?);
        Ok(EigenphaseSet {
            two_j: self.basis.two_j(),
            params: FloquetParams {
                alpha: self.alpha_scaled / self.basis.j(),
                hbar_eta,
                alpha_scaled: self.alpha_scaled,
            },
            kind,
            even,
            odd,
            max_residual: re.zip(ro).map(|(a, b)| a.max(b)),
        })
    }

    /// Sorted phases of one sector only.
    pub fn sector_phases(
        &self,
        kind: OperatorKind,
        parity: Parity,
        hbar_eta: f64,
    ) -> Result<Vec<f64>> {
        let (s, _) = diagonalize_block(
            self.block(kind, parity, hbar_eta).as_ref(),
            parity,
            false,
            &self.tol,
        )?;
        Ok(s.phases)
    }

    /// One sector with eigenvectors.
    pub fn sector_spectrum(
        &self,
        kind: OperatorKind,
        parity: Parity,
        hbar_eta: f64,
    ) -> Result<SectorSpectrum> {
        let (s, _) = diagonalize_block(
            self.block(kind, parity, hbar_eta).as_ref(),
            parity,
            true,
            &self.tol,
        )?;
        Ok(s)
    }

    /// dε/dħ_η for every level of a Floquet spectrum, in the set's phase order.
    ///
    /// Uses `dε_n/dλ = Re[i e^{iε_n} ⟨n|∂F/∂λ|n⟩]` with ∂F from the product rule.
    /// Levels that are degenerate within a sector are resolved by diagonalizing
    /// the Hermitian matrix `i e^{iε}⟨a|∂F|b⟩` over the degenerate subspace.
    pub fn eigenphase_derivative(&self, set: &EigenphaseSet) -> Result<SectorDerivatives> {
        if set.kind != OperatorKind::Floquet {
            return Err(Error::InvalidParameter {
                name: "kind",
                reason: "derivatives are implemented for the Floquet operator only".into(),
            });
        }
        let even = self.sector_derivative(&set.even, set.params.hbar_eta)?;
        let odd = self.sector_derivative(&set.odd, set.params.hbar_eta)?;
        Ok(SectorDerivatives { even, odd })
    }

    fn sector_derivative(&self, spec: &SectorSpectrum, hbar_eta: f64) -> Result<Vec<f64>> {
        let vectors = spec.vectors.as_ref().ok_or(Error::MissingVectors)?;
        let s = self.rot(spec.parity);
        let n = spec.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let tm = torsion_phases(&s.m_squared, hbar_eta, -1.0);
        let r = s.rotation.as_ref();
        let half_i = c64::new(0.0, 0.5);

        let mut out = vec![0.0; n];
        let mut start = 0;
        while start < n {
            // cluster of (circularly) coincident phases
            let mut end = start + 1;
            while end < n && (spec.phases[end] - spec.phases[start]).abs() < 1e-8 {
                end += 1;
            }
            let idx: Vec<usize> = (start..end).collect();
            let basis_vecs = orthonormalize(vectors, &idx);
            let k = idx.len();
            let eps = spec.phases[start];
            // b_j = T⁻ R v_j and a_i = R† T⁻ v_i
            let b: Vec<Vec<c64>> = basis_vecs
                .iter()
                .map(|v| {
                    let rv = mat_vec(r, v);
                    rv.iter().zip(&tm).map(|(x, t)| x * t).collect()
                })
                .collect();
            let a: Vec<Vec<c64>> = basis_vecs
                .iter()
                .map(|v| {
                    let tv: Vec<c64> = v.iter().zip(&tm).map(|(x, t)| x * t).collect();
                    mat_adjoint_vec(r, &tv)
                })
                .collect();
            let lambda_k: Vec<c64> = idx
                .iter()
                .map(|&i| c64::from_polar(1.0, -spec.phases[i]))
                .collect();
            let phase = c64::new(0.0, 1.0) * c64::from_polar(1.0, eps);
            let mut g = Mat::<c64>::zeros(k, k);
            for p in 0..k {
                for q in 0..k {
                    let mut m_fq = c64::new(0.0, 0.0);
                    let mut m_inner = c64::new(0.0, 0.0);
                    for i in 0..basis_vecs[p].len() {
                        m_fq += basis_vecs[p][i].conj() * s.m_squared[i] * basis_vecs[q][i];
                        m_inner += a[p][i].conj() * s.m_squared[i] * b[q][i];
                    }
                    let dfi = half_i * (m_fq * lambda_k[q] - m_inner);
                    g[(p, q)] = phase * dfi;
                }
            }
            if k == 1 {
                out[start] = g[(0, 0)].re;
            } else {
                let herm = Mat::<c64>::from_fn(k, k, |p, q| (g[(p, q)] + g[(q, p)].conj()) * 0.5);
                let vals = herm
                    .self_adjoint_eigenvalues(Side::Lower)
                    .map_err(|_| Error::ConvergenceFailure)?;
                for (slot, v) in (start..end).zip(vals) {
                    out[slot] = v;
                }
            }
            start = end;
        }
        Ok(out)
    }
}

/// dε/dħ_η per sector, aligned with the sector phase order.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorDerivatives {
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

impl SectorDerivatives {
    pub fn sector(&self, parity: Parity) -> &[f64] {
        match parity {
            Parity::Even => &self.even,
            Parity::Odd => &self.odd,
        }
    }
}

fn mat_vec(a: MatRef<'_, c64>, v: &[c64]) -> Vec<c64> {
    let mut out = vec![c64::new(0.0, 0.0); a.nrows()];
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            out[i] += a[(i, j)] * v[j];
        }
    }
    out
}

fn mat_adjoint_vec(a: MatRef<'_, c64>, v: &[c64]) -> Vec<c64> {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].conj() * v[i]).sum())
        .collect()
}

fn orthonormalize(vectors: &Mat<c64>, cols: &[usize]) -> Vec<Vec<c64>> {
    let n = vectors.nrows();
    let mut out: Vec<Vec<c64>> = Vec::with_capacity(cols.len());
    for &c in cols {
        let mut v: Vec<c64> = (0..n).map(|i| vectors[(i, c)]).collect();
        for u in &out {
            let proj: c64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
        out.push(v);
    }
    out
}

/// Real symmetric Jx block for one sector, assembled from the tridiagonal elements.
pub fn sector_jx(basis: &SpinBasis, parity: &ParityBasis, sector: Parity) -> Mat<f64> {
    let states = parity.sector(sector);
    let n = basis.dim();
    // full index -> (sector slot, coefficient)
    let sign = match sector {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    let mut slot = vec![None; n];
    for (k, s) in states.iter().enumerate() {
        match s.neg {
            None => slot[s.pos] = Some((k, 1.0)),
            Some(neg) => {
                slot[s.pos] = Some((k, std::f64::consts::FRAC_1_SQRT_2));
                slot[neg] = Some((k, sign * std::f64::consts::FRAC_1_SQRT_2));
            }
        }
    }
    let d = states.len();
    let mut out = Mat::<f64>::zeros(d, d);
    for i in 0..n.saturating_sub(1) {
        let v = 0.5 * basis.raising_element(i);
        if let (Some((a, ca)), Some((b, cb))) = (slot[i + 1], slot[i]) {
            out[(a, b)] += ca * cb * v;
            out[(b, a)] += ca * cb * v;
        }
    }
    out
}

/// e^{−i·angle·A} for real symmetric A.
fn real_symmetric_exp(a: MatRef<'_, f64>, angle: f64) -> Result<Mat<c64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::ConvergenceFailure)?;
    let v = evd.U();
    let w: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    let vc = Mat::<f64>::from_fn(n, n, |i, k| v[(i, k)] * (angle * w[k]).cos());
    let vs = Mat::<f64>::from_fn(n, n, |i, k| v[(i, k)] * (angle * w[k]).sin());
    let c = &vc * v.transpose();
    let s = &vs * v.transpose();
    Ok(Mat::from_fn(n, n, |i, j| c64::new(c[(i, j)], -s[(i, j)])))
}
