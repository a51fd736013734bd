use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_su2-butterfly"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    run(&all)
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sweep_writes_one_row_per_level_and_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--N", "2", "--grid", "4"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(text.starts_with("# su2-butterfly"));
    assert!(text.lines().any(|l| l == "hbar_eta,epsilon,parity"));
    let rows = data_rows(&dir.path().join("spectrum.csv"));
    assert_eq!(rows.len(), 12);
    // grid-major, phase-sorted within a point
    let parsed: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert!(parsed
        .windows(2)
        .all(|w| w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0].1 <= w[1].1)));
    let meta = json(&dir.path().join("meta.json"));
    assert_eq!(meta["command"], "sweep");
    assert!(
        meta["results"]["invariants"]["max_unitarity_residual"]
            .as_f64()
            .unwrap()
            < 1e-10
    );
    assert!(
        meta["results"]["symmetry"]["max_distance"]
            .as_f64()
            .unwrap()
            < 1e-8
    );
    assert!(!dir.path().join("spectrum.csv.incomplete").exists());
}

#[test]
fn hbar_eta_accepts_pi_expressions() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["sweep", "--J", "1.5", "--hbar-eta", "golden,2pi,pi/2"],
    );
    assert!(out.status.success());
    let rows = data_rows(&dir.path().join("spectrum.csv"));
    assert_eq!(rows.len(), 12);
    let first: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
    assert_eq!(first, (5f64.sqrt() - 1.0) * std::f64::consts::PI / 2.0);
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["sweep", "--N", "2", "--J", "1"],
        vec!["sweep", "--J", "1.3"],
        vec!["sweep", "--N", "0"],
        vec!["sweep", "--N", "2", "--hbar-eta", "two"],
        vec!["sweep", "--N", "2", "--operator", "fprime"],
        vec!["crossings", "--J-range", "5:3"],
        vec!["fractal", "--J", "3"],
    ] {
        let out = run_in(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_with_code_five() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "").unwrap();
    let out = run_in(&file, &["sweep", "--N", "2", "--grid", "4"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn spin_half_census_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["crossings", "--J", "0.5"]);
    assert!(out.status.success());
    assert!(data_rows(&dir.path().join("crossings.csv")).is_empty());
    let census = json(&dir.path().join("census.json"));
    assert_eq!(census["excluding_collapse"]["cross_parity"], 0);
    assert_eq!(census["excluding_collapse"]["same_parity"], 0);
    assert_eq!(census["stabilized"], true);
}

#[test]
fn unstabilized_census_exits_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "crossings",
            "--J",
            "2",
            "--initial-log2",
            "8",
            "--max-log2",
            "8",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(json(&dir.path().join("census.json"))["stabilized"], false);
}

#[test]
fn census_range_writes_scaling_fits() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["crossings", "--J-range", "2:4", "--initial-log2", "12"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for j in ["2", "3", "4"] {
        assert!(dir
            .path()
            .join(format!("J_{j}"))
            .join("crossings.csv")
            .exists());
    }
    let scaling = json(&dir.path().join("scaling.json"));
    assert_eq!(scaling["points"].as_array().unwrap().len(), 3);
    for convention in ["excluding_collapse", "including_collapse"] {
        assert!(scaling[convention]["cross_parity"]["exponent"].is_f64());
    }
}

#[test]
fn verify_passes_and_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify", "--J", "3"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let report = json(&dir.path().join("verify.json"));
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for n in [
        "unitarity",
        "parity_commutator",
        "periodicity_4pi",
        "reflection_2pi",
        "dressed_identity",
        "fprime_equals_floquet",
        "collapse_at_2pi",
    ] {
        assert!(names.contains(&n), "{n}");
    }
}

#[test]
fn fractal_single_q_gives_one_row_per_part() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "fractal",
            "--J",
            "600",
            "--hbar-eta",
            "golden",
            "--q",
            "0",
            "--box-exponents",
            "3:7",
            "--min-occupancy",
            "2",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = data_rows(&dir.path().join("dq.csv"));
    assert_eq!(rows.len(), 3);
    for r in rows {
        let d0: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
        assert!((d0 - 1.0).abs() < 0.05, "{r}");
    }
    for bins in [64, 512, 4096] {
        assert_eq!(
            data_rows(&dir.path().join(format!("histogram_{bins}.csv"))).len(),
            bins
        );
    }
    assert_eq!(data_rows(&dir.path().join("cumulative.csv")).len(), 1201);
}

#[test]
fn fractal_synthetic_cantor() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["fractal", "--synthetic", "cantor"]);
    assert!(out.status.success());
    let target = 2f64.ln() / 3f64.ln();
    for r in data_rows(&dir.path().join("dq.csv")) {
        let d: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
        assert!((d - target).abs() < 0.03, "{r}");
    }
}

#[test]
fn classical_section_without_torsion_keeps_x() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "classical",
            "--alpha",
            "0.05",
            "--eta",
            "0",
            "--seeds",
            "5",
            "--periods",
            "300",
        ],
    );
    assert!(out.status.success());
    let seeds = json(&dir.path().join("meta.json"))["results"]["seeds"].clone();
    for r in data_rows(&dir.path().join("section.csv")) {
        let f: Vec<&str> = r.split(',').collect();
        let id: usize = f[0].parse().unwrap();
        let (y, z): (f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        // a pure x-rotation keeps the seed's circle y² + z² = 1 − x²
        let x0 = seeds[id][0].as_f64().unwrap();
        assert!((y * y + z * z - (1.0 - x0 * x0)).abs() < 1e-12);
    }
}

#[test]
fn classical_correspondence_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "classical",
            "--correspondence",
            "--J",
            "50",
            "--alpha",
            "0.05",
            "--eta",
            "5",
        ],
    );
    assert!(out.status.success());
    let rows = data_rows(&dir.path().join("correspondence.csv"));
    assert_eq!(rows.len(), 11);
    let meta = json(&dir.path().join("meta.json"));
    assert!(meta["results"]["max_deviation"].as_f64().unwrap() > 0.0);
}

#[test]
fn output_is_independent_of_worker_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, w) in [(&a, "1"), (&b, "3")] {
        let out = run_in(
            dir.path(),
            &["sweep", "--J", "6.5", "--grid", "64", "--workers", w],
        );
        assert!(out.status.success());
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("spectrum.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}
