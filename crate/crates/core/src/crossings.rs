//! Level crossings in ħ_η.
//!
//! Levels are followed along a uniform grid by eigenvector overlap, then
//!
//! * opposite-parity track pairs are scanned for zeros of the wrapped phase
//!   difference (sign changes, plus grid-level minima of |d| that may hide a
//!   pair of roots or a tangency), each refined by bisection;
//! * adjacent same-parity pairs are scanned for minima of their gap, refined by
//!   golden-section search and classified by the refined gap.
//!
//! For integer J every level meets every other at ħ_η = 2π. That point is
//! excluded from the numerical hunt and counted analytically.

use std::f64::consts::{PI, TAU};

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{
    build_floquet, diagonalize_block, wrap_phase, FloquetParams, OperatorKind, SectorFloquet,
    SectorSpectrum, FOUR_PI,
};
use crate::su2::{Parity, SpinBasis, SpinOperators, Tolerances};

/// Below this overlap two consecutive eigenvectors are not considered the same level.
pub const MIN_TRACK_OVERLAP: f64 = 0.5;
const MAX_MATCH_DEPTH: usize = 24;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Classification thresholds and refinement targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingConfig {
    /// Bracket width in ħ_η at which refinement stops.
    pub lambda_tol: f64,
    /// A refined same-parity gap (or tangential contact) below this is a crossing.
    pub crossing_gap: f64,
    /// Refined same-parity gaps in `[crossing_gap, unresolved_gap]` are flagged.
    pub unresolved_gap: f64,
    /// A grid-level minimum is refined when its value is below `candidate_factor`
    /// times the larger of its two neighbouring increments.
    pub candidate_factor: f64,
    /// Cross-parity contacts without a sign change count as a touch below this.
    /// Opposite-parity doublets can stay closer than `crossing_gap` over long
    /// ranges of ħ_η, so touches use a bound near eigenphase round-off.
    pub tangency_gap: f64,
    /// Two zeros of one pair closer than this in ħ_η, with the phase difference
    /// between them below `tangency_gap`, are merged into a single touch.
    pub merge_window: f64,
    /// Level following used by [`hunt`] and [`census`].
    pub tracking: TrackMode,
}

impl Default for CrossingConfig {
    fn default() -> Self {
        Self {
            lambda_tol: 1e-12,
            crossing_gap: 1e-9,
            unresolved_gap: 1e-6,
            candidate_factor: 4.0,
            tangency_gap: 1e-13,
            merge_window: 1e-6,
            tracking: TrackMode::Adiabatic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingKind {
    CrossParity,
    SameParity,
}

impl CrossingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CrossingKind::CrossParity => "cross_parity",
            CrossingKind::SameParity => "same_parity",
        }
    }
}

/// A level identified by parity and its track index within a grid segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelId {
    pub parity: Parity,
    pub track: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub lambda_star: f64,
    pub kind: CrossingKind,
    pub level_a: LevelId,
    pub level_b: LevelId,
    /// Phase separation remaining at `lambda_star`.
    pub residual_gap: f64,
    /// Final bracket width in ħ_η.
    pub refinement_width: f64,
    /// Contact without a sign change of the phase difference.
    pub tangential: bool,
}

/// A same-parity gap minimum that did not qualify as a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapMinimum {
    pub lambda: f64,
    pub parity: Parity,
    pub tracks: (usize, usize),
    pub gap: f64,
}

/// How levels are followed from one grid point to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackMode {
    /// Maximal eigenvector overlap; identities pass through crossings.
    Overlap,
    /// Circular phase order within the sector; tracks never cross.
    Adiabatic,
}

/// Continuous level tracks of one parity sector along a sorted grid.
#[derive(Debug, Clone)]
pub struct SectorTracks {
    pub parity: Parity,
    pub mode: TrackMode,
    pub grid: Vec<f64>,
    /// `values[t][k]`: unwrapped phase of track `t` at `grid[k]`.
    pub values: Vec<Vec<f64>>,
    /// Smallest accepted overlap between consecutive matched eigenvectors
    /// (1 for adiabatic tracks).
    pub min_overlap: f64,
}

impl SectorTracks {
    pub fn n_tracks(&self) -> usize {
        self.values.len()
    }

    /// Wrapped phase of track `t` at grid index `k`.
    pub fn phase(&self, t: usize, k: usize) -> f64 {
        wrap_phase(self.values[t][k])
    }
}

/// Pairs each level at `a` with one at `b`, maximizing overlaps greedily.
///
/// Returns `perm` with `perm[i]` the index in `b` continuing level `i` of `a`,
/// and the smallest overlap used.
fn greedy_match(a: &Mat<c64>, b: &Mat<c64>) -> (Vec<usize>, f64) {
    let n = a.ncols();
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let ov: c64 = (0..a.nrows()).map(|r| a[(r, i)].conj() * b[(r, j)]).sum();
            cand.push((ov.norm(), i, j));
        }
    }
    cand.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut worst = 1.0f64;
    let mut left = n;
    for (ov, i, j) in cand {
        if left == 0 {
            break;
        }
        if perm[i] != usize::MAX || used[j] {
            continue;
        }
        perm[i] = j;
        used[j] = true;
        worst = worst.min(ov);
        left -= 1;
    }
    (perm, worst)
}

/// Matching between two grid points, bisecting the step while it is ambiguous.
fn match_between(
    system: &SectorFloquet,
    parity: Parity,
    la: f64,
    sa: &SectorSpectrum,
    lb: f64,
    sb: &SectorSpectrum,
    depth: usize,
) -> Result<(Vec<usize>, f64)> {
    let va = sa.vectors.as_ref().ok_or(Error::MissingVectors)?;
    let vb = sb.vectors.as_ref().ok_or(Error::MissingVectors)?;
    let (perm, worst) = greedy_match(va, vb);
    if worst >= MIN_TRACK_OVERLAP {
        return Ok((perm, worst));
    }
    if depth >= MAX_MATCH_DEPTH {
        return Err(Error::AmbiguousMatching {
            from: la,
            to: lb,
            overlap: worst,
        });
    }
    let lm = 0.5 * (la + lb);
    let sm = system.sector_spectrum(OperatorKind::Floquet, parity, lm)?;
    let (p1, w1) = match_between(system, parity, la, sa, lm, &sm, depth + 1)?;
    let (p2, w2) = match_between(system, parity, lm, &sm, lb, sb, depth + 1)?;
    Ok((p1.iter().map(|&i| p2[i]).collect(), w1.min(w2)))
}

/// Follows every level of one sector along `grid` by eigenvector overlap.
///
/// `grid` must be strictly increasing; values are used as given (no reduction
/// mod 4π), so a grid may extend slightly past either end of [0, 4π).
pub fn track_levels(system: &SectorFloquet, parity: Parity, grid: &[f64]) -> Result<SectorTracks> {
    check_grid(grid)?;
    let n = system.parity_basis().sector_dim(parity);
    let mut values = vec![Vec::with_capacity(grid.len()); n];
    let mut min_overlap = 1.0f64;

    const CHUNK: usize = 2048;
    let mut prev: Option<(f64, SectorSpectrum, Vec<usize>)> = None;
    for chunk in grid.chunks(CHUNK) {
        let spectra: Vec<SectorSpectrum> = chunk
            .par_iter()
            .map(|&l| system.sector_spectrum(OperatorKind::Floquet, parity, l))
            .collect::<Result<_>>()?;
        for (&l, spec) in chunk.iter().zip(spectra) {
            let assign = match &prev {
                None => {
                    for (t, v) in values.iter_mut().enumerate() {
                        v.push(spec.phases[t]);
                    }
                    (0..n).collect::<Vec<usize>>()
                }
                Some((pl, ps, passign)) => {
                    let (perm, worst) = match_between(system, parity, *pl, ps, l, &spec, 0)?;
                    min_overlap = min_overlap.min(worst);
                    let assign: Vec<usize> = passign.iter().map(|&i| perm[i]).collect();
                    for (t, v) in values.iter_mut().enumerate() {
                        let last = *v.last().expect("track has a previous value");
                        v.push(last + wrap_phase(spec.phases[assign[t]] - last));
                    }
                    assign
                }
            };
            prev = Some((l, spec, assign));
        }
    }
    Ok(SectorTracks {
        parity,
        mode: TrackMode::Overlap,
        grid: grid.to_vec(),
        values,
        min_overlap,
    })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "grid is empty".into(),
        });
    }
    if grid
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "grid must be strictly increasing".into(),
        });
    }
    Ok(())
}

/// Cyclic shift `s` such that `sorted[(i + s) % n]` continues `reference[i]`,
/// with the cost of the best and second-best shift.
fn best_shift(reference: &[f64], sorted: &[f64]) -> (usize, f64, f64) {
    let n = sorted.len();
    let mut best = (0, f64::INFINITY);
    let mut second = f64::INFINITY;
    for s in 0..n {
        let cost = (0..n)
            .map(|i| wrap_phase(sorted[(i + s) % n] - reference[i]).abs())
            .fold(0.0f64, f64::max);
        if cost < best.1 {
            second = best.1;
            best = (s, cost);
        } else if cost < second {
            second = cost;
        }
    }
    (best.0, best.1, second)
}

/// Cyclic alignment between two grid points, bisecting the step until the
/// largest single-level move is below half the runner-up.
fn align_between(
    system: &SectorFloquet,
    parity: Parity,
    la: f64,
    pa: &[f64],
    lb: f64,
    pb: &[f64],
    depth: usize,
) -> Result<usize> {
    let (s, cost, second) = best_shift(pa, pb);
    if pa.len() < 2 || cost < 0.5 * second {
        return Ok(s);
    }
    if depth >= MAX_MATCH_DEPTH {
        return Err(Error::AmbiguousMatching {
            from: la,
            to: lb,
            overlap: cost / second,
        });
    }
    let lm = 0.5 * (la + lb);
    let pm = system.sector_phases(OperatorKind::Floquet, parity, lm)?;
    let s1 = align_between(system, parity, la, pa, lm, &pm, depth + 1)?;
    let s2 = align_between(system, parity, lm, &pm, lb, pb, depth + 1)?;
    Ok((s1 + s2) % pa.len())
}

/// Follows the levels of one sector along `grid` by their circular order.
///
/// Tracks are the sorted eigenphases made continuous; they touch at exact
/// same-parity crossings but never pass through each other. Only eigenvalues
/// are computed.
pub fn track_levels_adiabatic(
    system: &SectorFloquet,
    parity: Parity,
    grid: &[f64],
) -> Result<SectorTracks> {
    check_grid(grid)?;
    let n = system.parity_basis().sector_dim(parity);
    let mut values = vec![Vec::with_capacity(grid.len()); n];

    const CHUNK: usize = 4096;
    let mut prev: Option<(f64, Vec<f64>)> = None;
    for chunk in grid.chunks(CHUNK) {
        let spectra: Vec<Vec<f64>> = chunk
            .par_iter()
            .map(|&l| system.sector_phases(OperatorKind::Floquet, parity, l))
            .collect::<Result<_>>()?;
        for (&l, phases) in chunk.iter().zip(spectra) {
            let aligned: Vec<f64> = match &prev {
                None => phases.clone(),
                Some((pl, pp)) => {
                    let s = align_between(system, parity, *pl, pp, l, &phases, 0)?;
                    (0..n).map(|i| phases[(i + s) % n]).collect()
                }
            };
            for (t, v) in values.iter_mut().enumerate() {
                let next = match v.last() {
                    None => aligned[t],
                    Some(&last) => last + wrap_phase(aligned[t] - last),
                };
                v.push(next);
            }
            prev = Some((l, aligned));
        }
    }
    Ok(SectorTracks {
        parity,
        mode: TrackMode::Adiabatic,
        grid: grid.to_vec(),
        values,
        min_overlap: 1.0,
    })
}

/// Re-diagonalizes a sector at arbitrary ħ_η and picks out followed levels,
/// by eigenvector overlap or by circular order relative to a nearby grid point.
struct LevelProbe<'a> {
    system: &'a SectorFloquet,
    parity: Parity,
    reference: ProbeReference,
}

enum ProbeReference {
    Vectors(Vec<Vec<c64>>),
    Order { phases: Vec<f64>, ranks: Vec<usize> },
}

/// Index of the level nearest to each of `wanted`, all distinct.
fn nearest_distinct(phases: &[f64], wanted: &[f64]) -> Vec<usize> {
    let mut taken = vec![false; phases.len()];
    wanted
        .iter()
        .map(|&p| {
            let k = (0..phases.len())
                .filter(|&k| !taken[k])
                .min_by(|&a, &b| {
                    wrap_phase(phases[a] - p)
                        .abs()
                        .total_cmp(&wrap_phase(phases[b] - p).abs())
                })
                .expect("sector has enough levels");
            taken[k] = true;
            k
        })
        .collect()
}

impl<'a> LevelProbe<'a> {
    /// References for the tracks whose phases at `lambda` are `phases`.
    fn new(
        system: &'a SectorFloquet,
        mode: TrackMode,
        parity: Parity,
        lambda: f64,
        phases: &[f64],
    ) -> Result<Self> {
        let reference = match mode {
            TrackMode::Overlap => {
                let spec = system.sector_spectrum(OperatorKind::Floquet, parity, lambda)?;
                let idx = nearest_distinct(&spec.phases, phases);
                ProbeReference::Vectors(
                    idx.iter()
                        .map(|&k| spec.vector(k).expect("vectors requested"))
                        .collect(),
                )
            }
            TrackMode::Adiabatic => {
                let all = system.sector_phases(OperatorKind::Floquet, parity, lambda)?;
                let ranks = nearest_distinct(&all, phases);
                ProbeReference::Order { phases: all, ranks }
            }
        };
        Ok(Self {
            system,
            parity,
            reference,
        })
    }

    /// Phases of the referenced levels at `lambda`, distinct levels per reference.
    fn eval(&self, lambda: f64) -> Result<Vec<f64>> {
        match &self.reference {
            ProbeReference::Order { phases, ranks } => {
                let now = self
                    .system
                    .sector_phases(OperatorKind::Floquet, self.parity, lambda)?;
                let n = now.len();
                let (s, _, _) = best_shift(phases, &now);
                Ok(ranks.iter().map(|&r| now[(r + s) % n]).collect())
            }
            ProbeReference::Vectors(refs) => {
                let spec =
                    self.system
                        .sector_spectrum(OperatorKind::Floquet, self.parity, lambda)?;
                let v = spec.vectors.as_ref().expect("vectors requested");
                let ov = |r: &[c64], k: usize| -> f64 {
                    (0..v.nrows())
                        .map(|i| r[i].conj() * v[(i, k)])
                        .sum::<c64>()
                        .norm_sqr()
                };
                let n = spec.len();
                match refs.len() {
                    1 => {
                        let k = (0..n)
                            .max_by(|&a, &b| ov(&refs[0], a).total_cmp(&ov(&refs[0], b)))
                            .expect("nonempty sector");
                        Ok(vec![spec.phases[k]])
                    }
                    2 => {
                        let mut best = (f64::NEG_INFINITY, 0, 0);
                        for a in 0..n {
                            let oa = ov(&refs[0], a);
                            for b in 0..n {
                                if a == b {
                                    continue;
                                }
                                let s = oa + ov(&refs[1], b);
                                if s > best.0 {
                                    best = (s, a, b);
                                }
                            }
                        }
                        Ok(vec![spec.phases[best.1], spec.phases[best.2]])
                    }
                    _ => unreachable!("probes follow one or two levels"),
                }
            }
        }
    }
}

/// Wrapped phase difference of an even and an odd level near one grid cell.
struct CrossProbe<'a> {
    even: LevelProbe<'a>,
    odd: LevelProbe<'a>,
}

impl CrossProbe<'_> {
    fn d(&self, lambda: f64) -> Result<f64> {
        let e = self.even.eval(lambda)?[0];
        let o = self.odd.eval(lambda)?[0];
        Ok(wrap_phase(e - o))
    }
}

/// Bisection on a sign change of `f` between `a` and `b`.
fn bisect<F>(
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    tol: f64,
    f: F,
) -> Result<(f64, f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    debug_assert!(fa.signum() != fb.signum() || fa == 0.0 || fb == 0.0);
    if fa == 0.0 {
        return Ok((a, 0.0, 0.0));
    }
    if fb == 0.0 {
        return Ok((b, 0.0, 0.0));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Err(Error::RefinementStall { width: b - a });
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok((m, 0.0, b - a));
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    // secant point inside the final bracket
    let root = if fb != fa {
        a - fa * (b - a) / (fb - fa)
    } else {
        0.5 * (a + b)
    };
    let root = root.clamp(a, b);
    let gap = f(root)?.abs().min(fa.abs()).min(fb.abs());
    Ok((root, gap, b - a))
}

/// Golden-section minimization of `f` on `[a, b]`.
///
/// Stops early when `stop(value)` holds for a sampled value; returns the
/// abscissa and value of the best sample and the final bracket width.
fn golden_min<F, S>(mut a: f64, mut b: f64, tol: f64, f: F, stop: S) -> Result<(f64, f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
    S: Fn(f64) -> bool,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    if stop(fc) {
        return Ok((c, fc, b - a));
    }
    let mut fd = f(d)?;
    if stop(fd) {
        return Ok((d, fd, b - a));
    }
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            if c <= a || c >= d {
                break;
            }
            fc = f(c)?;
            if stop(fc) {
                return Ok((c, fc, b - a));
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            if d >= b || d <= c {
                break;
            }
            fd = f(d)?;
            if stop(fd) {
                return Ok((d, fd, b - a));
            }
        }
    }
    if fc < fd {
        Ok((c, fc, b - a))
    } else {
        Ok((d, fd, b - a))
    }
}

fn is_candidate_minimum(prev: f64, cur: f64, next: f64, factor: f64) -> bool {
    cur <= prev && cur < next && cur <= factor * (prev - cur).max(next - cur)
}

/// Outcome of the cross-parity hunt.
#[derive(Debug, Clone, Default)]
pub struct CrossParityScan {
    pub events: Vec<CrossingEvent>,
    /// Sign changes whose refinement ended on a jump instead of a zero
    /// (a level label switching inside the cell); ħ_η of the final bracket.
    pub discontinuities: Vec<f64>,
}

/// Zeros of the wrapped phase difference between every even/odd track pair.
pub fn find_cross_parity(
    system: &SectorFloquet,
    even: &SectorTracks,
    odd: &SectorTracks,
    config: &CrossingConfig,
) -> Result<CrossParityScan> {
    if even.grid != odd.grid || even.mode != odd.mode {
        return Err(Error::InvalidParameter {
            name: "tracks",
            reason: "even and odd tracks must share a grid and a tracking mode".into(),
        });
    }
    let grid = &even.grid;
    let mode = even.mode;
    let pairs: Vec<(usize, usize)> = (0..even.n_tracks())
        .flat_map(|e| (0..odd.n_tracks()).map(move |o| (e, o)))
        .collect();
    let per_pair: Vec<CrossParityScan> = pairs
        .par_iter()
        .map(|&(e, o)| {
            let d: Vec<f64> = (0..grid.len())
                .map(|k| wrap_phase(even.values[e][k] - odd.values[o][k]))
                .collect();
            let probe_at = |k: usize| -> Result<CrossProbe<'_>> {
                Ok(CrossProbe {
                    even: LevelProbe::new(
                        system,
                        mode,
                        Parity::Even,
                        grid[k],
                        &[even.phase(e, k)],
                    )?,
                    odd: LevelProbe::new(system, mode, Parity::Odd, grid[k], &[odd.phase(o, k)])?,
                })
            };
            let mut scan = CrossParityScan::default();
            let mut push = |(lambda, gap, width): (f64, f64, f64), tangential: bool| {
                if gap < config.crossing_gap {
                    scan.events.push(CrossingEvent {
                        lambda_star: lambda,
                        kind: CrossingKind::CrossParity,
                        level_a: LevelId {
                            parity: Parity::Even,
                            track: e,
                        },
                        level_b: LevelId {
                            parity: Parity::Odd,
                            track: o,
                        },
                        residual_gap: gap,
                        refinement_width: width,
                        tangential,
                    });
                } else {
                    scan.discontinuities.push(lambda);
                }
            };
            for k in 0..grid.len().saturating_sub(1) {
                let (d0, d1) = (d[k], d[k + 1]);
                if d0.abs() >= PI / 2.0 || d1.abs() >= PI / 2.0 {
                    continue;
                }
                if d0 == 0.0 || (d0 > 0.0) != (d1 > 0.0) && d1 != 0.0 {
                    let probe = probe_at(k)?;
                    push(
                        bisect(grid[k], d0, grid[k + 1], d1, config.lambda_tol, |l| {
                            probe.d(l)
                        })?,
                        false,
                    );
                }
            }
            // grid minima of |d| without a sign change may hide two roots or a touch
            for k in 1..grid.len().saturating_sub(1) {
                let (a, b, c) = (d[k - 1], d[k], d[k + 1]);
                if b == 0.0 || a.signum() != b.signum() || c.signum() != b.signum() {
                    continue;
                }
                if b.abs() >= PI / 2.0
                    || !is_candidate_minimum(a.abs(), b.abs(), c.abs(), config.candidate_factor)
                {
                    continue;
                }
                let s = b.signum();
                let probe = probe_at(k)?;
                let signed = |l: f64| -> Result<f64> { Ok(s * probe.d(l)?) };
                // touches are often kinks where rank-ordered levels meet, so the
                // minimum is pinned down to round-off before it is judged
                let (lm, vm, width) = golden_min(grid[k - 1], grid[k + 1], 0.0, signed, |_| false)?;
                if vm <= -config.tangency_gap {
                    push(
                        bisect(grid[k - 1], a * s, lm, vm, config.lambda_tol, signed)?,
                        false,
                    );
                    push(
                        bisect(lm, vm, grid[k + 1], c * s, config.lambda_tol, signed)?,
                        false,
                    );
                } else if vm < config.tangency_gap {
                    push((lm, vm.abs(), width), true);
                }
            }
            // two roots closer than the phase resolution are one touch
            scan.events
                .sort_by(|x, y| x.lambda_star.total_cmp(&y.lambda_star));
            let mut merged: Vec<CrossingEvent> = Vec::with_capacity(scan.events.len());
            for ev in scan.events.drain(..) {
                if let Some(last) = merged.last_mut() {
                    if ev.lambda_star - last.lambda_star < config.merge_window {
                        let mid = 0.5 * (ev.lambda_star + last.lambda_star);
                        let k = grid.partition_point(|&g| g <= mid).saturating_sub(1);
                        if probe_at(k)?.d(mid)?.abs() < config.tangency_gap {
                            last.refinement_width =
                                ev.lambda_star - last.lambda_star + ev.refinement_width;
                            last.lambda_star = mid;
                            last.residual_gap = last.residual_gap.max(ev.residual_gap);
                            last.tangential = true;
                            continue;
                        }
                    }
                }
                merged.push(ev);
            }
            scan.events = merged;
            Ok(scan)
        })
        .collect::<Result<_>>()?;
    let mut out = CrossParityScan::default();
    for p in per_pair {
        out.events.extend(p.events);
        out.discontinuities.extend(p.discontinuities);
    }
    sort_events(&mut out.events);
    out.discontinuities.sort_by(f64::total_cmp);
    Ok(out)
}

/// Outcome of the same-parity hunt in one sector.
#[derive(Debug, Clone, Default)]
pub struct SameParityScan {
    pub crossings: Vec<CrossingEvent>,
    /// Refined gaps in the unresolved band.
    pub unresolved: Vec<GapMinimum>,
    /// Refined gaps above the unresolved band.
    pub avoided: Vec<GapMinimum>,
}

/// Gap minima between circularly adjacent tracks of one sector.
pub fn find_same_parity(
    system: &SectorFloquet,
    tracks: &SectorTracks,
    config: &CrossingConfig,
) -> Result<SameParityScan> {
    let n = tracks.n_tracks();
    let grid = &tracks.grid;
    if n < 2 || grid.len() < 3 {
        return Ok(SameParityScan::default());
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .collect();
    let per_pair: Vec<SameParityScan> = pairs
        .par_iter()
        .map(|&(ta, tb)| {
            let g: Vec<f64> = (0..grid.len())
                .map(|k| wrap_phase(tracks.values[ta][k] - tracks.values[tb][k]).abs())
                .collect();
            let mut scan = SameParityScan::default();
            for k in 1..grid.len() - 1 {
                if !is_candidate_minimum(g[k - 1], g[k], g[k + 1], config.candidate_factor) {
                    continue;
                }
                if !adjacent_on_circle(tracks, ta, tb, k) {
                    continue;
                }
                let probe = LevelProbe::new(
                    system,
                    tracks.mode,
                    tracks.parity,
                    grid[k],
                    &[tracks.phase(ta, k), tracks.phase(tb, k)],
                )?;
                let gap = |l: f64| -> Result<f64> {
                    let p = probe.eval(l)?;
                    Ok(wrap_phase(p[0] - p[1]).abs())
                };
                let (lm, gm, width) =
                    golden_min(grid[k - 1], grid[k + 1], config.lambda_tol, gap, |_| false)?;
                if gm < config.crossing_gap {
                    scan.crossings.push(CrossingEvent {
                        lambda_star: lm,
                        kind: CrossingKind::SameParity,
                        level_a: LevelId {
                            parity: tracks.parity,
                            track: ta,
                        },
                        level_b: LevelId {
                            parity: tracks.parity,
                            track: tb,
                        },
                        residual_gap: gm,
                        refinement_width: width,
                        tangential: false,
                    });
                } else {
                    let m = GapMinimum {
                        lambda: lm,
                        parity: tracks.parity,
                        tracks: (ta, tb),
                        gap: gm,
                    };
                    if gm <= config.unresolved_gap {
                        scan.unresolved.push(m);
                    } else {
                        scan.avoided.push(m);
                    }
                }
            }
            Ok(scan)
        })
        .collect::<Result<_>>()?;
    let mut out = SameParityScan::default();
    for s in per_pair {
        out.crossings.extend(s.crossings);
        out.unresolved.extend(s.unresolved);
        out.avoided.extend(s.avoided);
    }
    sort_events(&mut out.crossings);
    let by_lambda = |a: &GapMinimum, b: &GapMinimum| {
        a.lambda.total_cmp(&b.lambda).then(a.tracks.cmp(&b.tracks))
    };
    out.unresolved.sort_by(by_lambda);
    out.avoided.sort_by(by_lambda);
    Ok(out)
}

/// No other track of the sector lies strictly inside the shorter arc between `a` and `b`.
fn adjacent_on_circle(tracks: &SectorTracks, a: usize, b: usize, k: usize) -> bool {
    let pa = tracks.phase(a, k);
    let diff = wrap_phase(tracks.phase(b, k) - pa);
    let (lo, len) = if diff >= 0.0 {
        (pa, diff)
    } else {
        (pa + diff, -diff)
    };
    (0..tracks.n_tracks())
        .filter(|&t| t != a && t != b)
        .all(|t| {
            let off = (tracks.phase(t, k) - lo).rem_euclid(TAU);
            !(off > 0.0 && off < len)
        })
}

fn sort_events(events: &mut [CrossingEvent]) {
    events.sort_by(|x, y| {
        x.lambda_star.total_cmp(&y.lambda_star).then(
            (
                x.level_a.parity,
                x.level_a.track,
                x.level_b.parity,
                x.level_b.track,
            )
                .cmp(&(
                    y.level_a.parity,
                    y.level_a.track,
                    y.level_b.parity,
                    y.level_b.track,
                )),
        )
    });
}

/// Counts at one grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusStep {
    pub grid_points: usize,
    pub n_cross_parity: usize,
    pub n_same_parity: usize,
    pub n_tangential: usize,
    pub n_unresolved: usize,
    pub n_discontinuities: usize,
}

/// Crossing counts over ħ_η ∈ [0, 4π) for one J.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossingCensus {
    pub j: f64,
    pub alpha_scaled: f64,
    /// Crossings away from ħ_η = 2π.
    pub n_cross_parity: usize,
    pub n_same_parity: usize,
    pub n_unresolved: usize,
    /// Pair multiplicities of the collapse at ħ_η = 2π (zero for half-integer J).
    pub collapse_cross_parity: usize,
    pub collapse_same_parity: usize,
    pub stabilized: bool,
    pub grid_resolution_history: Vec<CensusStep>,
    #[serde(skip)]
    pub events: Vec<CrossingEvent>,
    #[serde(skip)]
    pub unresolved: Vec<GapMinimum>,
}

impl CrossingCensus {
    pub fn total_cross_parity(&self) -> usize {
        self.n_cross_parity + self.collapse_cross_parity
    }

    pub fn total_same_parity(&self) -> usize {
        self.n_same_parity + self.collapse_same_parity
    }
}

/// Grid settings of the census.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensusConfig {
    pub initial_log2: u32,
    pub max_log2: u32,
    pub crossing: CrossingConfig,
}

impl Default for CensusConfig {
    fn default() -> Self {
        Self {
            initial_log2: 14,
            max_log2: 20,
            crossing: CrossingConfig::default(),
        }
    }
}

/// Every crossing found at one fixed grid resolution.
#[derive(Debug, Clone)]
pub struct CrossingHunt {
    pub grid_points: usize,
    pub events: Vec<CrossingEvent>,
    pub unresolved: Vec<GapMinimum>,
    pub avoided: Vec<GapMinimum>,
    pub discontinuities: Vec<f64>,
}

impl CrossingHunt {
    pub fn step(&self) -> CensusStep {
        CensusStep {
            grid_points: self.grid_points,
            n_cross_parity: self.count(CrossingKind::CrossParity),
            n_same_parity: self.count(CrossingKind::SameParity),
            n_tangential: self.events.iter().filter(|e| e.tangential).count(),
            n_unresolved: self.unresolved.len(),
            n_discontinuities: self.discontinuities.len(),
        }
    }

    pub fn count(&self, kind: CrossingKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

/// Grid segments covering [0, 4π) for the hunt, padded by one step on each
/// side so that every cell and every interior minimum inside the range is seen.
/// For integer J the cells touching 2π are left out.
pub fn hunt_segments(basis: &SpinBasis, points: usize) -> Vec<Vec<f64>> {
    let h = FOUR_PI / points as f64;
    let at = |k: i64| k as f64 * h;
    let n = points as i64;
    if basis.is_integer() {
        let half = n / 2;
        vec![
            (-1..half).map(at).collect(),
            (half + 1..=n + 1).map(at).collect(),
        ]
    } else {
        vec![(-1..=n + 1).map(at).collect()]
    }
}

/// Finds all crossings at a fixed number of grid points over [0, 4π).
pub fn hunt(
    system: &SectorFloquet,
    points: usize,
    config: &CrossingConfig,
) -> Result<CrossingHunt> {
    let basis = *system.basis();
    let collapse = basis.is_integer();
    let mut events = Vec::new();
    let mut unresolved = Vec::new();
    let mut avoided = Vec::new();
    let mut discontinuities = Vec::new();
    let in_range = |l: f64| (0.0..FOUR_PI).contains(&l) && !(collapse && (l - TAU).abs() < 1e-9);
    for segment in hunt_segments(&basis, points) {
        let follow = |parity| match config.tracking {
            TrackMode::Overlap => track_levels(system, parity, &segment),
            TrackMode::Adiabatic => track_levels_adiabatic(system, parity, &segment),
        };
        let even = follow(Parity::Even)?;
        let odd = follow(Parity::Odd)?;
        let cross = find_cross_parity(system, &even, &odd, config)?;
        events.extend(cross.events.into_iter().filter(|e| in_range(e.lambda_star)));
        discontinuities.extend(cross.discontinuities.into_iter().filter(|&l| in_range(l)));
        for tracks in [&even, &odd] {
            let scan = find_same_parity(system, tracks, config)?;
            events.extend(
                scan.crossings
                    .into_iter()
                    .filter(|e| in_range(e.lambda_star)),
            );
            unresolved.extend(scan.unresolved.into_iter().filter(|m| in_range(m.lambda)));
            avoided.extend(scan.avoided.into_iter().filter(|m| in_range(m.lambda)));
        }
    }
    sort_events(&mut events);
    Ok(CrossingHunt {
        grid_points: points,
        events,
        unresolved,
        avoided,
        discontinuities,
    })
}

/// Crossing census with grid doubling until two consecutive resolutions agree.
pub fn census(
    basis: SpinBasis,
    alpha_scaled: f64,
    config: &CensusConfig,
) -> Result<CrossingCensus> {
    let system = SectorFloquet::new(basis, alpha_scaled)?;
    let (ne, no) = (
        system.parity_basis().even_dim,
        system.parity_basis().odd_dim,
    );
    let (collapse_cross, collapse_same) = if basis.is_integer() {
        (ne * no, ne * (ne - 1) / 2 + no * (no - 1) / 2)
    } else {
        (0, 0)
    };
    let mut history = Vec::new();
    let mut last: Option<CrossingHunt> = None;
    let mut stabilized = false;
    for log2 in config.initial_log2..=config.max_log2 {
        let result = hunt(&system, 1usize << log2, &config.crossing)?;
        let step = result.step();
        history.push(step);
        if let Some(prev) = &last {
            let p = prev.step();
            if (p.n_cross_parity, p.n_same_parity, p.n_unresolved)
                == (step.n_cross_parity, step.n_same_parity, step.n_unresolved)
            {
                stabilized = true;
                last = Some(result);
                break;
            }
        }
        last = Some(result);
    }
    let result = last.expect("at least one resolution is run");
    let census = CrossingCensus {
        j: basis.j(),
        alpha_scaled,
        n_cross_parity: result.count(CrossingKind::CrossParity),
        n_same_parity: result.count(CrossingKind::SameParity),
        n_unresolved: result.unresolved.len(),
        collapse_cross_parity: collapse_cross,
        collapse_same_parity: collapse_same,
        stabilized,
        grid_resolution_history: history,
        events: result.events,
        unresolved: result.unresolved,
    };
    Ok(census)
}

/// Like [`census`] but an unstabilized result is an error.
pub fn census_strict(
    basis: SpinBasis,
    alpha_scaled: f64,
    config: &CensusConfig,
) -> Result<CrossingCensus> {
    let c = census(basis, alpha_scaled, config)?;
    if !c.stabilized {
        return Err(Error::NonStabilized {
            doublings: (config.max_log2 - config.initial_log2) as usize,
        });
    }
    Ok(c)
}

/// Crossings found by a plain dense scan, for validating [`census`] at small J.
#[derive(Debug, Clone, Default)]
pub struct ReferenceScan {
    pub cross_parity: Vec<f64>,
    pub same_parity: Vec<f64>,
}

/// Dense sweep of [0, 4π) with step `step` using the full (2J+1)-dimensional
/// operator.
///
/// Parities come from ⟨v|P|v⟩ of each eigenvector and levels are labelled by
/// their rank in [−π, π) at every point, so nothing is shared with the
/// sector-block machinery. Sign changes are bisected, grid minima are refined
/// by golden section, and the neighbourhood of ħ_η = 2π is skipped for integer J.
pub fn reference_scan(
    basis: SpinBasis,
    alpha_scaled: f64,
    step: f64,
    config: &CrossingConfig,
) -> Result<ReferenceScan> {
    let ops = SpinOperators::new(basis);
    let tol = Tolerances::default();
    let eval = |l: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let f = build_floquet(
            &ops,
            &FloquetParams::new_unreduced(&basis, alpha_scaled, l)?,
        )?;
        let (spec, _) = diagonalize_block(f.as_ref(), Parity::Even, true, &tol)?;
        let v = spec.vectors.as_ref().expect("vectors requested");
        let (mut even, mut odd) = (Vec::new(), Vec::new());
        for k in 0..spec.len() {
            let p: f64 = (0..v.nrows())
                .map(|i| (v[(i, k)].conj() * v[(basis.mirror(i), k)]).re)
                .sum();
            if p > 0.0 {
                even.push(spec.phases[k]);
            } else {
                odd.push(spec.phases[k]);
            }
        }
        Ok((even, odd))
    };
    let n = (FOUR_PI / step).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    let samples: Vec<(Vec<f64>, Vec<f64>)> =
        grid.par_iter().map(|&l| eval(l)).collect::<Result<_>>()?;
    let (ne, no) = (samples[0].0.len(), samples[0].1.len());
    let skip = |l: f64| basis.is_integer() && (l - TAU).abs() < 10.0 * step;
    let counts_match = |k: usize| samples[k].0.len() == ne && samples[k].1.len() == no;

    let mut out = ReferenceScan::default();
    // cross parity
    for i in 0..ne {
        for j in 0..no {
            let d = |k: usize| wrap_phase(samples[k].0[i] - samples[k].1[j]);
            let f = |l: f64| -> Result<f64> {
                let (e, o) = eval(l)?;
                if e.len() != ne {
                    return Ok(f64::NAN);
                }
                Ok(wrap_phase(e[i] - o[j]))
            };
            for k in 0..n {
                if skip(grid[k]) || skip(grid[k + 1]) || !counts_match(k) || !counts_match(k + 1) {
                    continue;
                }
                let (d0, d1) = (d(k), d(k + 1));
                if d0.abs() < PI / 2.0 && d1.abs() < PI / 2.0 && (d0 > 0.0) != (d1 > 0.0) {
                    let (root, gap, _) =
                        bisect(grid[k], d0, grid[k + 1], d1, config.lambda_tol, f)?;
                    if gap < config.crossing_gap && root < FOUR_PI {
                        out.cross_parity.push(root);
                    }
                }
            }
            for k in 1..n {
                if skip(grid[k]) || !(counts_match(k - 1) && counts_match(k) && counts_match(k + 1))
                {
                    continue;
                }
                let (a, b, c) = (d(k - 1), d(k), d(k + 1));
                if a.signum() != b.signum() || c.signum() != b.signum() || b.abs() >= PI / 2.0 {
                    continue;
                }
                if !is_candidate_minimum(a.abs(), b.abs(), c.abs(), config.candidate_factor) {
                    continue;
                }
                let sgn = b.signum();
                let g = |l: f64| -> Result<f64> { Ok(sgn * f(l)?) };
                let (lm, vm, _) = golden_min(grid[k - 1], grid[k + 1], 0.0, g, |_| false)?;
                if vm <= -config.tangency_gap {
                    for (lo, flo, hi, fhi) in [
                        (grid[k - 1], sgn * a, lm, vm),
                        (lm, vm, grid[k + 1], sgn * c),
                    ] {
                        let (root, gap, _) = bisect(lo, flo, hi, fhi, config.lambda_tol, g)?;
                        if gap < config.crossing_gap {
                            out.cross_parity.push(root);
                        }
                    }
                } else if vm < config.tangency_gap {
                    out.cross_parity.push(lm);
                }
            }
        }
    }
    // same parity: circularly adjacent ranks within a sector
    for parity in [Parity::Even, Parity::Odd] {
        let dim = if parity == Parity::Even { ne } else { no };
        if dim < 2 {
            continue;
        }
        let pick = |s: &(Vec<f64>, Vec<f64>)| -> Vec<f64> {
            if parity == Parity::Even {
                s.0.clone()
            } else {
                s.1.clone()
            }
        };
        let gap_at = |p: &[f64], r: usize| -> f64 {
            if r + 1 < p.len() {
                p[r + 1] - p[r]
            } else {
                p[0] + TAU - p[r]
            }
        };
        for r in 0..dim {
            let g = |k: usize| gap_at(&pick(&samples[k]), r);
            let f = |l: f64| -> Result<f64> {
                let s = eval(l)?;
                let p = pick(&s);
                Ok(if p.len() == dim {
                    gap_at(&p, r)
                } else {
                    f64::NAN
                })
            };
            for k in 1..n {
                if skip(grid[k]) || !(counts_match(k - 1) && counts_match(k) && counts_match(k + 1))
                {
                    continue;
                }
                let (a, b, c) = (g(k - 1), g(k), g(k + 1));
                if !is_candidate_minimum(a, b, c, config.candidate_factor) {
                    continue;
                }
                let (lm, vm, _) =
                    golden_min(grid[k - 1], grid[k + 1], config.lambda_tol, f, |_| false)?;
                if vm.abs() < config.crossing_gap {
                    out.same_parity.push(lm);
                }
            }
        }
    }
    out.cross_parity.sort_by(f64::total_cmp);
    out.same_parity.sort_by(f64::total_cmp);
    Ok(out)
}

/// Least-squares line through (ln J, ln count).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

pub fn powerlaw_fit(points: &[(f64, f64)]) -> Result<PowerLaw> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(points.len()));
    }
    if let Some(&(j, _)) = points.iter().find(|p| p.1 <= 0.0) {
        return Err(Error::ZeroCount(j));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(PowerLaw {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared: r2,
    })
}

/// Ordinary least squares y = slope·x + intercept, with r².
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, intercept, r2)
}
