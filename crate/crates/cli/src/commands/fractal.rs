use std::path::Path;

use clap::Args;
use serde::Serialize;
use serde_json::{json, Value};
use su2_butterfly::floquet::{EigenphaseSet, OperatorKind, SectorFloquet};
use su2_butterfly::multifractal::{
    cumulative_density, density_histogram_bins, dq_spectrum, synthetic_cantor, synthetic_uniform,
    BoxDomain, DqConfig, DqSpectrum, SpectrumPart, CANTOR_LEVELS,
};
use su2_butterfly::su2::Parity;

use super::positive;
use crate::args::{parse_real, RunArgs};
use crate::error::{CliError, CliResult};
use crate::output::{num, write_json, CsvFile, Meta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticArg {
    Uniform,
    Cantor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainArg {
    Range,
    Circle,
}

/// Cumulative density, histograms and generalized dimensions of a spectrum.
#[derive(Debug, Clone, Args, Serialize)]
pub struct FractalArgs {
    /// Total boson number N (J = N/2)
    #[arg(long = "N", value_name = "N", conflicts_with_all = ["j", "synthetic"])]
    pub n: Option<u32>,
    /// Spin J
    #[arg(long = "J", value_name = "J", conflicts_with = "synthetic")]
    pub j: Option<f64>,
    /// ħ_η: a number, `golden` or a multiple of pi
    #[arg(long, value_parser = parse_real, conflicts_with = "synthetic")]
    pub hbar_eta: Option<f64>,
    /// Kick strength α·J
    #[arg(long, default_value = "1", value_parser = parse_real)]
    pub alpha_scaled: f64,
    /// Also analyse the single-kick top at the same parameters
    #[arg(long, conflicts_with = "synthetic")]
    pub baseline: bool,
    /// Analyse a synthetic set instead of an operator spectrum
    #[arg(long, value_enum)]
    pub synthetic: Option<SyntheticArg>,
    /// Number of uniform synthetic points
    #[arg(long, default_value_t = 6000)]
    pub points: usize,
    /// Seed of the uniform synthetic set
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Depth of the Cantor construction
    #[arg(long, default_value_t = CANTOR_LEVELS)]
    pub levels: u32,
    /// Comma-separated q values (default 0, 0.5, …, 10)
    #[arg(long, value_parser = parse_real, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// Box exponents k as FROM:TO, boxes of size L/2^k
    #[arg(long, default_value = "4:11")]
    pub box_exponents: String,
    #[arg(long, value_enum, default_value = "range")]
    pub domain: DomainArg,
    /// Drop scales whose mean box occupancy is below this
    #[arg(long, default_value_t = 8.0)]
    pub min_occupancy: f64,
    /// Histogram bin counts over [−π, π)
    #[arg(long, value_delimiter = ',', default_value = "64,512,4096")]
    pub bins: Vec<usize>,
    /// Report staircase gaps wider than this fraction of the support
    #[arg(long, default_value_t = 0.01)]
    pub gap_fraction: f64,
    #[command(flatten)]
    pub run: RunArgs,
}

fn parse_exponents(text: &str) -> CliResult<Vec<u32>> {
    let bad = || CliError::config(format!("--box-exponents {text:?}: expected FROM:TO"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a > b || b > 30 {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

/// One analysed set: phases per part, parity labels for the staircase.
struct Input {
    parts: Vec<(SpectrumPart, Vec<f64>)>,
    labelled: Vec<(f64, &'static str)>,
}

impl Input {
    fn from_set(set: &EigenphaseSet) -> Self {
        Self {
            parts: [
                SpectrumPart::Even,
                SpectrumPart::Odd,
                SpectrumPart::Combined,
            ]
            .into_iter()
            .map(|p| (p, p.phases(set)))
            .collect(),
            labelled: set
                .combined()
                .into_iter()
                .map(|(e, p)| (e, p.as_str()))
                .collect(),
        }
    }

    fn synthetic(phases: Vec<f64>) -> Self {
        let mut labelled: Vec<(f64, &'static str)> = phases.iter().map(|&e| (e, "none")).collect();
        labelled.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            parts: vec![(SpectrumPart::Combined, phases)],
            labelled,
        }
    }

    fn combined(&self) -> &[f64] {
        &self
            .parts
            .iter()
            .find(|(p, _)| *p == SpectrumPart::Combined)
            .expect("combined part")
            .1
    }
}

fn analyse(
    dir: &Path,
    label: &str,
    input: &Input,
    args: &FractalArgs,
    cfg: &DqConfig,
) -> CliResult<Value> {
    let header = |what: &str| vec![format!("command: fractal, {what} of {label}")];
    let n = input.labelled.len();

    let mut csv = CsvFile::create(
        dir,
        "cumulative.csv",
        &header("cumulative density"),
        "epsilon,parity,cumulative",
    )?;
    for (k, (e, p)) in input.labelled.iter().enumerate() {
        csv.row(&[num(*e), p.to_string(), num((k + 1) as f64 / n as f64)])?;
    }
    csv.finish()?;

    for &bins in &args.bins {
        let h = density_histogram_bins(input.combined(), bins)?;
        let mut csv = CsvFile::create(
            dir,
            &format!("histogram_{bins}.csv"),
            &[format!(
                "command: fractal, histogram of {label}, bin width {}",
                num(h.scale)
            )],
            "bin_lower,bin_upper,count,density",
        )?;
        for (i, &c) in h.counts.iter().enumerate() {
            let density = c as f64 / (h.total as f64 * h.scale);
            csv.row(&[
                num(h.bin_edges[i]),
                num(h.bin_edges[i + 1]),
                c.to_string(),
                num(density),
            ])?;
        }
        csv.finish()?;
    }

    let spectra: Vec<DqSpectrum> = input
        .parts
        .iter()
        .map(|(part, phases)| dq_spectrum(phases, *part, cfg))
        .collect::<Result<_, _>>()?;
    let mut csv = CsvFile::create(
        dir,
        "dq.csv",
        &header("generalized dimensions"),
        "q,D_q,r2,sector,origin_shift_delta",
    )?;
    for s in &spectra {
        for e in &s.estimates {
            csv.row(&[
                num(e.q),
                num(e.d_q),
                num(e.r_squared),
                e.sector.as_str().to_string(),
                e.origin_shift_delta.map_or_else(String::new, num),
            ])?;
        }
    }
    csv.finish()?;

    let gaps = cumulative_density(input.combined()).gap_report(args.gap_fraction);
    let summary: Vec<Value> = spectra
        .iter()
        .map(|s| {
            let d: Vec<f64> = s.estimates.iter().map(|e| e.d_q).collect();
            let rise = d.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
            json!({
                "sector": s.estimates.first().map(|e| e.sector.as_str()),
                "n": s.n,
                "used_exponents": s.used_exponents,
                "dropped_exponents": s.dropped_exponents,
                "small_sample": s.small_sample,
                "d0": s.get(0.0).map(|e| e.d_q),
                "d1": s.get(1.0).map(|e| e.d_q),
                "d2": s.get(2.0).map(|e| e.d_q),
                "max_increase_in_q": rise,
            })
        })
        .collect();
    Ok(json!({ "levels": n, "gaps": gaps, "dq": summary }))
}

fn d2(results: &Value) -> Option<f64> {
    results["dq"]
        .as_array()?
        .iter()
        .find(|s| s["sector"] == "combined")?["d2"]
        .as_f64()
}

pub fn run(args: &FractalArgs) -> CliResult<()> {
    positive("--min-occupancy", args.min_occupancy)?;
    positive("--gap-fraction", args.gap_fraction)?;
    if args.bins.contains(&0) {
        return Err(CliError::config("--bins must be positive"));
    }
    let cfg = DqConfig {
        q_list: args.q.clone().unwrap_or_else(|| DqConfig::default().q_list),
        box_exponents: parse_exponents(&args.box_exponents)?,
        domain: match args.domain {
            DomainArg::Range => BoxDomain::Range,
            DomainArg::Circle => BoxDomain::Circle,
        },
        min_mean_occupancy: args.min_occupancy,
        ..Default::default()
    };
    let out = &args.run.out;

    if let Some(kind) = args.synthetic {
        let (label, phases) = match kind {
            SyntheticArg::Uniform => {
                if args.points == 0 {
                    return Err(CliError::config("--points must be positive"));
                }
                (
                    format!("{} uniform phases, seed {}", args.points, args.seed),
                    synthetic_uniform(args.points, args.seed),
                )
            }
            SyntheticArg::Cantor => {
                if args.levels > 24 {
                    return Err(CliError::config("--levels must be at most 24"));
                }
                (
                    format!("middle-thirds Cantor set, depth {}", args.levels),
                    synthetic_cantor(args.levels),
                )
            }
        };
        let results = analyse(out, &label, &Input::synthetic(phases), args, &cfg)?;
        write_json(out, "meta.json", &Meta::new("fractal", args, results))?;
        return Ok(());
    }

    let basis = match (args.n, args.j) {
        (Some(0), _) => return Err(CliError::config("N must be at least 1")),
        (Some(n), None) => su2_butterfly::su2::SpinBasis::from_boson_number(n)?,
        (None, Some(j)) => su2_butterfly::su2::SpinBasis::from_spin(j)?,
        _ => return Err(CliError::config("give --N or --J, or --synthetic")),
    };
    let hbar_eta = args
        .hbar_eta
        .ok_or_else(|| CliError::config("--hbar-eta is required for operator spectra"))?;
    let system = SectorFloquet::new(basis, args.alpha_scaled)?;
    let label = |k: OperatorKind| {
        format!(
            "{} at J = {}, hbar_eta = {}",
            k.name(),
            basis.j(),
            num(hbar_eta)
        )
    };

    if !args.baseline {
        let set = system.spectrum(OperatorKind::Floquet, hbar_eta, false)?;
        let results = analyse(
            out,
            &label(OperatorKind::Floquet),
            &Input::from_set(&set),
            args,
            &cfg,
        )?;
        write_json(out, "meta.json", &Meta::new("fractal", args, results))?;
        return Ok(());
    }

    let (f, k) = rayon::join(
        || system.spectrum(OperatorKind::Floquet, hbar_eta, false),
        || system.spectrum(OperatorKind::KickedTop, hbar_eta, false),
    );
    let (f, k) = (f?, k?);
    let rf = analyse(
        &out.join("floquet"),
        &label(OperatorKind::Floquet),
        &Input::from_set(&f),
        args,
        &cfg,
    )?;
    let rk = analyse(
        &out.join("kicked_top"),
        &label(OperatorKind::KickedTop),
        &Input::from_set(&k),
        args,
        &cfg,
    )?;
    let sectors = |s: &EigenphaseSet| json!({ "even": s.sector(Parity::Even).len(), "odd": s.sector(Parity::Odd).len() });
    let results = json!({
        "floquet": rf,
        "kicked_top": rk,
        "sector_sizes": sectors(&f),
        "d2_kicked_top_minus_floquet": match (d2(&rk), d2(&rf)) {
            (Some(a), Some(b)) => json!(a - b),
            _ => Value::Null,
        },
    });
    write_json(out, "meta.json", &Meta::new("fractal", args, results))?;
    Ok(())
}
