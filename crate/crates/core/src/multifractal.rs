//! Level statistics of eigen-phase sets: cumulative density, histograms at
//! several scales and generalized fractal dimensions D_q by box counting.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossings::linear_fit;
use crate::error::{Error, Result};
use crate::floquet::{EigenphaseSet, OperatorKind, SectorFloquet};
use crate::su2::{Parity, SpinBasis};

/// Which part of a spectrum an estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumPart {
    Even,
    Odd,
    Combined,
}

impl SpectrumPart {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectrumPart::Even => "even",
            SpectrumPart::Odd => "odd",
            SpectrumPart::Combined => "combined",
        }
    }

    pub fn phases(&self, set: &EigenphaseSet) -> Vec<f64> {
        match self {
            SpectrumPart::Even => set.sector(Parity::Even).phases.clone(),
            SpectrumPart::Odd => set.sector(Parity::Odd).phases.clone(),
            SpectrumPart::Combined => set.phases(),
        }
    }
}

/// Normalized counting function N(ε) = #{ε_n ≤ ε} / n on [−π, π).
#[derive(Debug, Clone, PartialEq)]
pub struct Staircase {
    sorted: Vec<f64>,
}

/// An empty stretch of the phase circle between consecutive levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
}

impl Staircase {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Right-continuous: N(ε) includes levels at ε.
    pub fn eval(&self, eps: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|&p| p <= eps) as f64 / self.sorted.len() as f64
    }

    /// Sorted level positions (the jump points).
    pub fn steps(&self) -> &[f64] {
        &self.sorted
    }

    /// Lowest and highest level.
    pub fn support(&self) -> Option<(f64, f64)> {
        Some((*self.sorted.first()?, *self.sorted.last()?))
    }

    /// Gaps between consecutive levels inside the support wider than
    /// `threshold`, widest first.
    pub fn gaps(&self, threshold: f64) -> Vec<SpectralGap> {
        let mut out: Vec<SpectralGap> = self
            .sorted
            .windows(2)
            .map(|w| SpectralGap {
                lower: w[0],
                upper: w[1],
                width: w[1] - w[0],
            })
            .filter(|g| g.width > threshold)
            .collect();
        out.sort_by(|a, b| {
            b.width
                .total_cmp(&a.width)
                .then(a.lower.total_cmp(&b.lower))
        });
        out
    }

    pub fn widest_gap(&self) -> Option<SpectralGap> {
        self.gaps(f64::NEG_INFINITY).into_iter().next()
    }

    /// Interior gaps wider than `fraction` of the support width.
    pub fn gap_report(&self, fraction: f64) -> GapReport {
        let (lo, hi) = self.support().unwrap_or((0.0, 0.0));
        let threshold = fraction * (hi - lo);
        GapReport {
            support: (lo, hi),
            threshold,
            widest: self.widest_gap().map_or(0.0, |g| g.width),
            gaps: self.gaps(threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub support: (f64, f64),
    pub threshold: f64,
    pub widest: f64,
    pub gaps: Vec<SpectralGap>,
}

impl GapReport {
    /// No flat step wider than the threshold.
    pub fn is_gapless(&self) -> bool {
        self.gaps.is_empty()
    }
}

pub fn cumulative_density(phases: &[f64]) -> Staircase {
    let mut sorted = phases.to_vec();
    sorted.sort_by(f64::total_cmp);
    Staircase { sorted }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    /// `bins + 1` edges from −π to π.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
    pub scale: f64,
}

fn box_index(phase: f64, bins: usize) -> usize {
    let x = (phase + PI) / TAU * bins as f64;
    (x.floor() as i64).rem_euclid(bins as i64) as usize
}

/// Histogram with `bins` equal boxes starting at −π.
pub fn density_histogram_bins(phases: &[f64], bins: usize) -> Result<DensityProfile> {
    if bins == 0 {
        return Err(Error::BadScale(f64::INFINITY));
    }
    let mut counts = vec![0u64; bins];
    for &p in phases {
        counts[box_index(p, bins)] += 1;
    }
    let scale = TAU / bins as f64;
    Ok(DensityProfile {
        bin_edges: (0..=bins).map(|k| -PI + k as f64 * scale).collect(),
        counts,
        total: phases.len() as u64,
        scale,
    })
}

/// Histogram at bin width `scale`, which must divide 2π.
pub fn density_histogram(phases: &[f64], scale: f64) -> Result<DensityProfile> {
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::BadScale(scale));
    }
    let ratio = TAU / scale;
    let bins = ratio.round();
    if bins < 1.0 || (ratio - bins).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::BadScale(scale));
    }
    density_histogram_bins(phases, bins as usize)
}

/// Interval partitioned into dyadic boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxDomain {
    /// The whole circle [−π, π), origin at −π.
    Circle,
    /// The range [min ε, max ε] of the set.
    Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqConfig {
    pub q_list: Vec<f64>,
    /// Box sizes L/2^k for each k, L the domain length.
    pub box_exponents: Vec<u32>,
    pub domain: BoxDomain,
    /// Scales whose mean box occupancy n/2^k falls below this are dropped.
    pub min_mean_occupancy: f64,
    /// Also estimate with the boxes moved by half a box and report the change.
    pub origin_shift: bool,
}

impl Default for DqConfig {
    fn default() -> Self {
        Self {
            q_list: (0..=20).map(|i| i as f64 * 0.5).collect(),
            box_exponents: (4..=11).collect(),
            domain: BoxDomain::Range,
            min_mean_occupancy: 8.0,
            origin_shift: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqEstimate {
    pub q: f64,
    pub d_q: f64,
    /// Smallest and largest box size in the fit.
    pub fit_window: (f64, f64),
    pub r_squared: f64,
    pub sector: SpectrumPart,
    /// D_q with half-box-shifted boxes minus D_q.
    pub origin_shift_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqSpectrum {
    pub n: usize,
    pub estimates: Vec<DqEstimate>,
    pub used_exponents: Vec<u32>,
    /// Scales dropped for low mean box occupancy.
    pub dropped_exponents: Vec<u32>,
    /// Fewer than 1000 levels.
    pub small_sample: bool,
}

impl DqSpectrum {
    pub fn get(&self, q: f64) -> Option<&DqEstimate> {
        self.estimates.iter().find(|e| (e.q - q).abs() < 1e-12)
    }
}

#[derive(Debug, Clone, Copy)]
struct Boxes {
    origin: f64,
    length: f64,
    periodic: bool,
}

impl Boxes {
    fn new(phases: &[f64], domain: BoxDomain) -> Self {
        match domain {
            BoxDomain::Circle => Self {
                origin: -PI,
                length: TAU,
                periodic: true,
            },
            BoxDomain::Range => {
                let lo = phases.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = phases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                // widened by one ulp-scale step so the maximum falls in the last box
                let length = (hi - lo) * (1.0 + 1e-12) + f64::MIN_POSITIVE;
                Self {
                    origin: lo,
                    length,
                    periodic: false,
                }
            }
        }
    }

    /// Nonzero box counts at 2^k boxes, boxes displaced by `shift` box widths.
    fn counts(&self, phases: &[f64], k: u32, shift: f64) -> Vec<u64> {
        let bins = 1usize << k;
        let slots = if self.periodic { bins } else { bins + 1 };
        let mut counts = vec![0u64; slots];
        for &p in phases {
            let x = ((p - self.origin) / self.length * bins as f64 + shift).floor() as i64;
            let i = if self.periodic {
                x.rem_euclid(bins as i64)
            } else {
                x.clamp(0, bins as i64)
            };
            counts[i as usize] += 1;
        }
        counts.retain(|&c| c > 0);
        counts
    }
}

/// ln Σ p^q (q ≠ 1) or Σ p ln p (q = 1) over nonempty boxes.
fn partition_value(counts: &[u64], n: usize, q: f64) -> f64 {
    let nf = n as f64;
    if (q - 1.0).abs() < 1e-12 {
        return counts
            .iter()
            .map(|&c| {
                let p = c as f64 / nf;
                p * p.ln()
            })
            .sum();
    }
    let terms: Vec<f64> = counts.iter().map(|&c| q * (c as f64 / nf).ln()).collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn fit_dq(phases: &[f64], boxes: Boxes, q: f64, exps: &[u32], shift: f64) -> (f64, f64) {
    let n = phases.len();
    let (xs, ys): (Vec<f64>, Vec<f64>) = exps
        .iter()
        .map(|&k| {
            let ln_l = (boxes.length / (1u64 << k) as f64).ln();
            let y = partition_value(&boxes.counts(phases, k, shift), n, q);
            let x = if (q - 1.0).abs() < 1e-12 {
                ln_l
            } else {
                (q - 1.0) * ln_l
            };
            (x, y)
        })
        .unzip();
    let (slope, _, r2) = linear_fit(&xs, &ys);
    (slope, r2)
}

/// Generalized dimensions of one phase set over a window of dyadic box sizes.
pub fn dq_spectrum(phases: &[f64], sector: SpectrumPart, config: &DqConfig) -> Result<DqSpectrum> {
    let n = phases.len();
    if let Some(q) = config.q_list.iter().find(|q| !q.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: format!("non-finite value {q}"),
        });
    }
    if let Some(p) = phases.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "phases",
            reason: format!("non-finite value {p}"),
        });
    }
    let mut exps = config.box_exponents.clone();
    exps.sort_unstable();
    exps.dedup();
    let (used, dropped): (Vec<u32>, Vec<u32>) = exps
        .into_iter()
        .partition(|&k| k < 63 && n as f64 >= config.min_mean_occupancy * (1u64 << k) as f64);
    if used.len() < 3 {
        return Err(Error::DegenerateFit(used.len()));
    }
    let boxes = Boxes::new(phases, config.domain);
    let size = |k: u32| boxes.length / (1u64 << k) as f64;
    let window = (size(*used.last().unwrap()), size(used[0]));
    let estimates = config
        .q_list
        .par_iter()
        .map(|&q| {
            let (d_q, r_squared) = fit_dq(phases, boxes, q, &used, 0.0);
            let origin_shift_delta = config
                .origin_shift
                .then(|| fit_dq(phases, boxes, q, &used, 0.5).0 - d_q);
            DqEstimate {
                q,
                d_q,
                fit_window: window,
                r_squared,
                sector,
                origin_shift_delta,
            }
        })
        .collect();
    Ok(DqSpectrum {
        n,
        estimates,
        used_exponents: used,
        dropped_exponents: dropped,
        small_sample: n < 1000,
    })
}

/// D_q of one operator's spectrum, per sector and combined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDq {
    pub kind: OperatorKind,
    pub even: DqSpectrum,
    pub odd: DqSpectrum,
    pub combined: DqSpectrum,
}

impl OperatorDq {
    pub fn part(&self, part: SpectrumPart) -> &DqSpectrum {
        match part {
            SpectrumPart::Even => &self.even,
            SpectrumPart::Odd => &self.odd,
            SpectrumPart::Combined => &self.combined,
        }
    }
}

pub fn operator_dq(set: &EigenphaseSet, config: &DqConfig) -> Result<OperatorDq> {
    Ok(OperatorDq {
        kind: set.kind,
        even: dq_spectrum(&SpectrumPart::Even.phases(set), SpectrumPart::Even, config)?,
        odd: dq_spectrum(&SpectrumPart::Odd.phases(set), SpectrumPart::Odd, config)?,
        combined: dq_spectrum(
            &SpectrumPart::Combined.phases(set),
            SpectrumPart::Combined,
            config,
        )?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub floquet: OperatorDq,
    pub kicked_top: OperatorDq,
}

/// Spectra of both operators at one parameter point.
pub fn baseline_spectra(
    basis: SpinBasis,
    alpha_scaled: f64,
    hbar_eta: f64,
) -> Result<(EigenphaseSet, EigenphaseSet)> {
    let system = SectorFloquet::new(basis, alpha_scaled)?;
    let (f, k) = rayon::join(
        || system.spectrum(OperatorKind::Floquet, hbar_eta, false),
        || system.spectrum(OperatorKind::KickedTop, hbar_eta, false),
    );
    Ok((f?, k?))
}

/// D_q of the double-kicked operator next to the single-kick baseline.
pub fn baseline_comparison(
    basis: SpinBasis,
    alpha_scaled: f64,
    hbar_eta: f64,
    config: &DqConfig,
) -> Result<BaselineComparison> {
    let (f, k) = baseline_spectra(basis, alpha_scaled, hbar_eta)?;
    Ok(BaselineComparison {
        floquet: operator_dq(&f, config)?,
        kicked_top: operator_dq(&k, config)?,
    })
}

/// `n` independent uniform phases in [−π, π).
pub fn synthetic_uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-PI..PI)).collect()
}

/// Depth of the default Cantor set: 2^14 points keep the full default window.
pub const CANTOR_LEVELS: u32 = 14;

/// Left endpoints of the 2^levels intervals of the middle-thirds Cantor
/// construction on [0, 1), mapped onto [−π, π).
pub fn synthetic_cantor(levels: u32) -> Vec<f64> {
    let mut pts = vec![0.0f64];
    let mut width = 1.0;
    for _ in 0..levels {
        width /= 3.0;
        pts = pts.iter().flat_map(|&x| [x, x + 2.0 * width]).collect();
    }
    pts.into_iter().map(|x| -PI + TAU * x).collect()
}

/// ln 2 / ln 3.
pub fn cantor_dimension() -> f64 {
    2f64.ln() / 3f64.ln()
}
