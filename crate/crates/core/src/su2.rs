//! Spin-J representation of SU(2) in the |m⟩ basis.
//!
//! All matrices use the same ordering: row/column `i` is the state with
//! `m = -J + i`, so `m` runs upward from `-J` to `+J`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use faer::{c64, Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The (2J+1)-dimensional space spanned by the Jz eigenstates |m⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinBasis {
    two_j: u32,
}

impl SpinBasis {
    /// Basis for `n` bosons shared between two modes, J = N/2.
    pub fn from_boson_number(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpin(0.0));
        }
        Ok(Self { two_j: n })
    }

    /// Basis for spin `j`; `2j` must be a positive integer.
    pub fn from_spin(j: f64) -> Result<Self> {
        let two_j = 2.0 * j;
        if !two_j.is_finite() || two_j < 1.0 || (two_j - two_j.round()).abs() > 1e-9 {
            return Err(Error::InvalidSpin(j));
        }
        Ok(Self {
            two_j: two_j.round() as u32,
        })
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn is_integer(&self) -> bool {
        self.two_j.is_multiple_of(2)
    }

    /// Effective Planck constant 1/J.
    pub fn hbar_eff(&self) -> f64 {
        1.0 / self.j()
    }

    /// Magnetic quantum number of basis index `i`.
    pub fn m(&self, i: usize) -> f64 {
        (2 * i as i64 - self.two_j as i64) as f64 / 2.0
    }

    pub fn m_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m(i)).collect()
    }

    /// Index of the state |−m⟩ given the index of |m⟩.
    pub fn mirror(&self, i: usize) -> usize {
        self.dim() - 1 - i
    }

    /// ⟨m+1|J+|m⟩ for the basis index of |m⟩.
    pub fn raising_element(&self, i: usize) -> f64 {
        let j = self.j();
        let m = self.m(i);
        (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    }
}

/// Structural tag carried alongside a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    Hermitian,
    Unitary,
    Diagonal,
    General,
}

/// Dense complex matrix with a semantic tag.
#[derive(Debug, Clone)]
pub struct ComplexMatrix {
    mat: Mat<c64>,
    kind: MatrixKind,
}

impl ComplexMatrix {
    pub fn new(mat: Mat<c64>, kind: MatrixKind) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "matrix must be square");
        Self { mat, kind }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(Mat::identity(dim, dim), MatrixKind::Diagonal)
    }

    pub fn from_diagonal(diag: &[c64]) -> Self {
        let n = diag.len();
        let mut mat = Mat::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = d;
        }
        Self::new(mat, MatrixKind::Diagonal)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: MatrixKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn as_ref(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn into_inner(self) -> Mat<c64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    pub fn diagonal(&self) -> Vec<c64> {
        (0..self.dim()).map(|i| self.mat[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.mat.adjoint().to_owned(), self.kind)
    }

    /// Matrix product; a product of unitaries stays tagged unitary.
    pub fn mul(&self, rhs: &Self) -> Self {
        let kind = match (self.kind, rhs.kind) {
            (MatrixKind::Unitary, MatrixKind::Unitary) => MatrixKind::Unitary,
            (MatrixKind::Diagonal, MatrixKind::Diagonal) => MatrixKind::Diagonal,
            _ => MatrixKind::General,
        };
        Self::new(&self.mat * &rhs.mat, kind)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self::new(&self.mat + &rhs.mat, MatrixKind::General)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self::new(&self.mat - &rhs.mat, MatrixKind::General)
    }

    pub fn scale(&self, factor: c64) -> Self {
        let n = self.dim();
        Self::new(
            Mat::from_fn(n, n, |i, j| self.mat[(i, j)] * factor),
            MatrixKind::General,
        )
    }

    /// `self · rhs − rhs · self`
    pub fn commutator(&self, rhs: &Self) -> Self {
        Self::new(
            &self.mat * &rhs.mat - &rhs.mat * &self.mat,
            MatrixKind::General,
        )
    }

    /// Largest absolute entry of `self − rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        max_abs_diff(self.mat.as_ref(), rhs.mat.as_ref())
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut best = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                best = best.max(self.mat[(i, j)].norm());
            }
        }
        best
    }

    /// max-norm of U†U − I.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        let prod = self.mat.adjoint() * &self.mat;
        max_abs_diff(prod.as_ref(), Mat::<c64>::identity(n, n).as_ref())
    }

    /// max-norm of H − H†.
    pub fn hermiticity_residual(&self) -> f64 {
        max_abs_diff(self.mat.as_ref(), self.mat.adjoint().to_owned().as_ref())
    }

    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        let n = self.dim();
        assert_eq!(v.len(), n);
        let mut out = vec![c64::new(0.0, 0.0); n];
        for (j, &vj) in v.iter().enumerate() {
            if vj == c64::new(0.0, 0.0) {
                continue;
            }
            let col = self.mat.col(j);
            for i in 0..n {
                out[i] += col[i] * vj;
            }
        }
        out
    }
}

pub(crate) fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            best = best.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    best
}

/// Absolute max-norm tolerances used by structural checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub unitarity: f64,
    pub hermiticity: f64,
    pub parity_block: f64,
    pub unit_circle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitarity: 1e-10,
            hermiticity: 1e-10,
            parity_block: 1e-10,
            unit_circle: 1e-8,
        }
    }
}

pub fn build_jz(basis: &SpinBasis) -> ComplexMatrix {
    let diag: Vec<c64> = basis
        .m_values()
        .into_iter()
        .map(|m| c64::new(m, 0.0))
        .collect();
    ComplexMatrix::from_diagonal(&diag)
}

pub fn build_jx(basis: &SpinBasis) -> ComplexMatrix {
    let n = basis.dim();
    let mut mat = Mat::<c64>::zeros(n, n);
    for i in 0..n - 1 {
        let v = 0.5 * basis.raising_element(i);
        mat[(i + 1, i)] = c64::new(v, 0.0);
        mat[(i, i + 1)] = c64::new(v, 0.0);
    }
    ComplexMatrix::new(mat, MatrixKind::Hermitian)
}

pub fn build_jy(basis: &SpinBasis) -> ComplexMatrix {
    // Jy = (J+ − J−) / 2i: ⟨m+1|Jy|m⟩ = −(i/2)c, ⟨m|Jy|m+1⟩ = +(i/2)c
    let n = basis.dim();
    let mut mat = Mat::<c64>::zeros(n, n);
    for i in 0..n - 1 {
        let v = 0.5 * basis.raising_element(i);
        mat[(i + 1, i)] = c64::new(0.0, -v);
        mat[(i, i + 1)] = c64::new(0.0, v);
    }
    ComplexMatrix::new(mat, MatrixKind::Hermitian)
}

/// Lowering operator J− (real, subdiagonal transposed).
pub fn build_jminus(basis: &SpinBasis) -> ComplexMatrix {
    let n = basis.dim();
    let mut mat = Mat::<c64>::zeros(n, n);
    for i in 0..n - 1 {
        mat[(i, i + 1)] = c64::new(basis.raising_element(i), 0.0);
    }
    ComplexMatrix::new(mat, MatrixKind::General)
}

/// Raising operator J+.
pub fn build_jplus(basis: &SpinBasis) -> ComplexMatrix {
    let n = basis.dim();
    let mut mat = Mat::<c64>::zeros(n, n);
    for i in 0..n - 1 {
        mat[(i + 1, i)] = c64::new(basis.raising_element(i), 0.0);
    }
    ComplexMatrix::new(mat, MatrixKind::General)
}

/// Parity eigenvalue of a sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }

    pub fn other(&self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Parity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            other => Err(format!("unknown parity `{other}`")),
        }
    }
}

/// One parity-adapted basis vector: `(|m⟩ ± |−m⟩)/√2`, or `|0⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorState {
    /// Index of |m⟩ with m ≥ 0.
    pub pos: usize,
    /// Index of |−m⟩, absent for m = 0.
    pub neg: Option<usize>,
    pub m_abs: f64,
}

/// Split of the |m⟩ basis into the even and odd eigenspaces of P|m⟩ = |−m⟩.
///
/// Even states are ordered `|0⟩` (integer J only) followed by increasing |m|;
/// odd states by increasing |m|. `transform` stacks them as rows, even first.
#[derive(Debug, Clone)]
pub struct ParityBasis {
    pub even_dim: usize,
    pub odd_dim: usize,
    pub transform: Mat<f64>,
    even: Vec<SectorState>,
    odd: Vec<SectorState>,
}

impl ParityBasis {
    pub fn new(basis: &SpinBasis) -> Self {
        let n = basis.dim();
        let mut even = Vec::new();
        let mut odd = Vec::new();
        // m ≥ 0 lives in the upper half of the index range
        for pos in (n / 2)..n {
            let m = basis.m(pos);
            if m == 0.0 {
                even.push(SectorState {
                    pos,
                    neg: None,
                    m_abs: 0.0,
                });
            } else {
                let neg = Some(basis.mirror(pos));
                even.push(SectorState { pos, neg, m_abs: m });
                odd.push(SectorState { pos, neg, m_abs: m });
            }
        }
        let mut transform = Mat::<f64>::zeros(n, n);
        for (row, s) in even.iter().enumerate() {
            match s.neg {
                None => transform[(row, s.pos)] = 1.0,
                Some(neg) => {
                    transform[(row, s.pos)] = FRAC_1_SQRT_2;
                    transform[(row, neg)] = FRAC_1_SQRT_2;
                }
            }
        }
        for (k, s) in odd.iter().enumerate() {
            let row = even.len() + k;
            let neg = s.neg.expect("odd states have m > 0");
            transform[(row, s.pos)] = FRAC_1_SQRT_2;
            transform[(row, neg)] = -FRAC_1_SQRT_2;
        }
        Self {
            even_dim: even.len(),
            odd_dim: odd.len(),
            transform,
            even,
            odd,
        }
    }

    pub fn sector(&self, parity: Parity) -> &[SectorState] {
        match parity {
            Parity::Even => &self.even,
            Parity::Odd => &self.odd,
        }
    }

    pub fn sector_dim(&self, parity: Parity) -> usize {
        self.sector(parity).len()
    }

    /// Block `⟨a|A|b⟩` with `a` in sector `row` and `b` in sector `col`.
    pub fn project(&self, a: MatRef<'_, c64>, row: Parity, col: Parity) -> Mat<c64> {
        let rs = self.sector(row);
        let cs = self.sector(col);
        let rsign = sign_of(row);
        let csign = sign_of(col);
        Mat::from_fn(rs.len(), cs.len(), |r, c| {
            let (ri, ci) = (&rs[r], &cs[c]);
            let mut acc = a[(ri.pos, ci.pos)];
            let mut norm = 1.0;
            if let Some(cn) = ci.neg {
                acc += a[(ri.pos, cn)] * csign;
                norm *= FRAC_1_SQRT_2;
            }
            if let Some(rn) = ri.neg {
                acc += a[(rn, ci.pos)] * rsign;
                if let Some(cn) = ci.neg {
                    acc += a[(rn, cn)] * (rsign * csign);
                }
                norm *= FRAC_1_SQRT_2;
            }
            acc * norm
        })
    }

    /// Embeds a sector vector back into the |m⟩ basis.
    pub fn embed(&self, parity: Parity, v: &[c64], dim: usize) -> Vec<c64> {
        let states = self.sector(parity);
        assert_eq!(v.len(), states.len());
        let sign = sign_of(parity);
        let mut out = vec![c64::new(0.0, 0.0); dim];
        for (s, &x) in states.iter().zip(v) {
            match s.neg {
                None => out[s.pos] = x,
                Some(neg) => {
                    out[s.pos] = x * FRAC_1_SQRT_2;
                    out[neg] = x * (sign * FRAC_1_SQRT_2);
                }
            }
        }
        out
    }

    /// m² for each state of a sector; Jz² is diagonal in the parity basis.
    pub fn m_squared(&self, parity: Parity) -> Vec<f64> {
        self.sector(parity)
            .iter()
            .map(|s| s.m_abs * s.m_abs)
            .collect()
    }
}

fn sign_of(parity: Parity) -> f64 {
    match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    }
}

/// The exchange operator P|m⟩ = |−m⟩ together with its eigenbasis.
pub fn build_parity(basis: &SpinBasis) -> (ComplexMatrix, ParityBasis) {
    let n = basis.dim();
    let mut mat = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        mat[(basis.mirror(i), i)] = c64::new(1.0, 0.0);
    }
    (
        ComplexMatrix::new(mat, MatrixKind::Unitary),
        ParityBasis::new(basis),
    )
}

/// Eigen-system of a Hermitian generator.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<c64>,
}

impl HermitianEigen {
    pub fn new(generator: MatRef<'_, c64>) -> Result<Self> {
        let evd = generator
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::ConvergenceFailure)?;
        let values = (0..generator.nrows()).map(|i| evd.S()[i].re).collect();
        Ok(Self {
            values,
            vectors: evd.U().to_owned(),
        })
    }

    /// e^{−i·angle·G} = V diag(e^{−i·angle·λ}) V†.
    pub fn exp(&self, angle: f64) -> Mat<c64> {
        let n = self.values.len();
        let phases: Vec<c64> = self
            .values
            .iter()
            .map(|&l| c64::from_polar(1.0, -angle * l))
            .collect();
        let scaled = Mat::from_fn(n, n, |i, k| self.vectors[(i, k)] * phases[k]);
        &scaled * self.vectors.adjoint()
    }
}

/// e^{−i·angle·G} for a Hermitian generator G.
///
/// Diagonal generators short-circuit to elementwise phases.
pub fn rotation_exp(generator: &ComplexMatrix, angle: f64) -> Result<ComplexMatrix> {
    if generator.kind() == MatrixKind::Diagonal {
        let phases: Vec<c64> = generator
            .diagonal()
            .into_iter()
            .map(|d| c64::from_polar(1.0, -angle * d.re))
            .collect();
        return Ok(ComplexMatrix::from_diagonal(&phases));
    }
    let eigen = HermitianEigen::new(generator.as_ref())?;
    Ok(ComplexMatrix::new(eigen.exp(angle), MatrixKind::Unitary))
}

/// Jx, Jy, Jz for one basis, with the eigen-system of Jx built on first use.
#[derive(Debug)]
pub struct SpinOperators {
    basis: SpinBasis,
    pub jx: ComplexMatrix,
    pub jy: ComplexMatrix,
    pub jz: ComplexMatrix,
    jx_eigen: OnceLock<HermitianEigen>,
}

impl SpinOperators {
    pub fn new(basis: SpinBasis) -> Self {
        Self {
            basis,
            jx: build_jx(&basis),
            jy: build_jy(&basis),
            jz: build_jz(&basis),
            jx_eigen: OnceLock::new(),
        }
    }

    pub fn basis(&self) -> &SpinBasis {
        &self.basis
    }

    fn jx_eigen(&self) -> Result<&HermitianEigen> {
        if let Some(e) = self.jx_eigen.get() {
            return Ok(e);
        }
        let e = HermitianEigen::new(self.jx.as_ref())?;
        Ok(self.jx_eigen.get_or_init(|| e))
    }

    /// e^{−i·angle·Jx} from the cached eigen-system.
    pub fn rotate_x(&self, angle: f64) -> Result<ComplexMatrix> {
        Ok(ComplexMatrix::new(
            self.jx_eigen()?.exp(angle),
            MatrixKind::Unitary,
        ))
    }

    /// e^{−i·angle·Jz}.
    pub fn rotate_z(&self, angle: f64) -> ComplexMatrix {
        let phases: Vec<c64> = self
            .basis
            .m_values()
            .into_iter()
            .map(|m| c64::from_polar(1.0, -angle * m))
            .collect();
        ComplexMatrix::from_diagonal(&phases)
    }

    /// ⟨ψ|Jα|ψ⟩ for α = x, y, z.
    pub fn expectation(&self, psi: &[c64]) -> [f64; 3] {
        [&self.jx, &self.jy, &self.jz].map(|op| {
            let w = op.apply(psi);
            psi.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum()
        })
    }
}

/// SU(2) coherent state: |J⟩ rotated to point along (sinθ cosφ, sinθ sinφ, cosθ).
///
/// Amplitudes are `√C(2J, J+m) cos(θ/2)^{J+m} sin(θ/2)^{J−m} e^{−imφ}`, evaluated
/// in log space so that J in the thousands does not overflow.
pub fn coherent_state(basis: &SpinBasis, theta: f64, phi: f64) -> Vec<c64> {
    let two_j = basis.two_j() as usize;
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let (ln_c, ln_s) = (c.abs().ln(), s.abs().ln());
    let mut ln_binom = 0.0;
    let mut out = Vec::with_capacity(two_j + 1);
    // k = J − m counts down from the top state
    let mut by_k = Vec::with_capacity(two_j + 1);
    for k in 0..=two_j {
        if k > 0 {
            ln_binom += ((two_j - k + 1) as f64 / k as f64).ln();
        }
        let up = (two_j - k) as f64;
        let down = k as f64;
        let mag = if (c == 0.0 && up > 0.0) || (s == 0.0 && down > 0.0) {
            0.0
        } else {
            let mut l = 0.5 * ln_binom;
            if up > 0.0 {
                l += up * ln_c;
            }
            if down > 0.0 {
                l += down * ln_s;
            }
            l.exp()
        };
        let sign = if (c < 0.0 && (two_j - k) % 2 == 1) ^ (s < 0.0 && k % 2 == 1) {
            -1.0
        } else {
            1.0
        };
        by_k.push(sign * mag);
    }
    for i in 0..=two_j {
        let m = basis.m(i);
        let k = two_j - i;
        out.push(c64::from_polar(by_k[k], -m * phi));
    }
    out
}
