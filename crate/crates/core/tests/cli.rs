use std::path::Path;
use std::process::{Command, Output};

use floquet::io::{read_spectrum, SpectrumRow};
use floquet::{builtin_model, solve, ModelSpec, SolveOptions};

fn floquet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floquet")).args(args).output().unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    floquet(&all)
}

fn csv_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    csv::Reader::from_path(path)
        .unwrap()
        .deserialize()
        .map(|r| r.unwrap())
        .collect()
}

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[derive(serde::Deserialize)]
struct SweepRow {
    lambda: f64,
    state: usize,
    eps: f64,
    ebar: f64,
}

#[test]
fn solve_static_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["solve", "--builtin", "static", "--param", "omega=0.7"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<SpectrumRow> = csv_rows(&dir.path().join("spectrum.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows[0].eps.abs() < 1e-12 && rows[0].ebar.abs() < 1e-12);
    assert!((rows[1].eps - 0.3).abs() < 1e-12 && (rows[1].ebar - 1.0).abs() < 1e-12);
}

#[test]
fn solve_circular_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["solve", "--builtin", "two_level_circular"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<SpectrumRow> = csv_rows(&dir.path().join("spectrum.csv"));
    assert!((rows[0].eps - 1.070156).abs() < 1e-6 && (rows[0].ebar + 0.265496).abs() < 1e-6);
    assert!((rows[1].eps - 0.429844).abs() < 1e-6 && (rows[1].ebar - 0.265496).abs() < 1e-6);
}

#[test]
fn solve_explicit_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    std::fs::write(
        &model,
        r#"{"dim": 2, "omega": 0.7, "harmonics": [{"m": 0, "re": [[0, 0], [0, 1]], "im": [[0, 0], [0, 0]]}]}"#,
    )
    .unwrap();
    let out = run_in(dir.path(), &["solve", "--model", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<SpectrumRow> = csv_rows(&dir.path().join("spectrum.csv"));
    assert!((rows[1].eps - 0.3).abs() < 1e-12);
}

#[test]
fn missing_model_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["solve", "--model", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["kind"], "config");
}

#[test]
fn bad_flags_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["solve"][..],
        &["solve", "--builtin", "static", "--model", "x.json"],
        &["solve", "--builtin", "nope"],
        &["solve", "--builtin", "static", "--harmonics", "many"],
        &["solve", "--builtin", "static", "--param", "omega"],
        &["solve", "--builtin", "static", "--param", "bogus=1"],
        &["solve", "--builtin", "static", "--unknown-flag"],
    ] {
        let out = run_in(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_json(&out)["kind"], "config", "{args:?}");
    }
}

#[test]
fn compare_passes_on_builtins() {
    for name in ["static", "two_level_circular", "two_level_linear", "driven_ring"] {
        let dir = tempfile::tempdir().unwrap();
        let out = run_in(dir.path(), &["compare", "--builtin", name]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
        assert!(text.starts_with("state,eps_sambe,eps_oracle,d_eps,ebar_sambe,ebar_oracle,d_ebar,overlap,pass"));
    }
}

#[test]
fn compare_static_deltas_are_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["compare", "--builtin", "static"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(dir.path().join("compare.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let d_eps: f64 = rec[3].parse().unwrap();
        let d_ebar: f64 = rec[6].parse().unwrap();
        assert!(d_eps <= 1e-12 && d_ebar <= 1e-12, "{rec:?}");
    }
}

#[test]
fn compare_with_one_harmonic_violates_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["compare", "--builtin", "driven_ring", "--harmonics", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let err = error_json(&out);
    assert_eq!(err["kind"], "gate");
    assert!(!err["rows"].as_array().unwrap().is_empty());
}

#[test]
fn variational_matches_solve_on_static() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["solve", "--builtin", "static"]).status.code(), Some(0));
    assert_eq!(run_in(dir.path(), &["variational", "--builtin", "static"]).status.code(), Some(0));
    let solved: Vec<SpectrumRow> = csv_rows(&dir.path().join("spectrum.csv"));
    let text = std::fs::read_to_string(dir.path().join("variational.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let first = rdr.records().next().unwrap().unwrap();
    let eps: f64 = first[1].parse().unwrap();
    let ebar: f64 = first[2].parse().unwrap();
    assert!((eps - solved[0].eps).abs() < 1e-6 && (ebar - solved[0].ebar).abs() < 1e-6);
    assert_eq!(&first[5], "true");
}

#[test]
fn variational_single_iteration_is_not_converged() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["variational", "--builtin", "two_level_linear", "--max-iters", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_json(&out)["kind"], "convergence");
    let text = std::fs::read_to_string(dir.path().join("variational.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(",false,"));
}

#[test]
fn zero_length_sweep_is_one_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["sweep", "--builtin", "two_level_circular", "--sweep-param", "V", "--from", "0.2", "--to", "0.2"],
    );
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<SweepRow> = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.lambda == 0.2));
}

#[test]
fn static_gap_sweep_crosses_in_eps_but_not_in_ebar() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "sweep", "--builtin", "static", "--param", "omega=0.5", "--sweep-param", "e1", "--from", "0.8",
            "--to", "1.2", "--count", "5",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<SweepRow> = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 10);
    for r in rows.iter().filter(|r| r.state == 1) {
        assert!((r.ebar - r.lambda).abs() < 1e-12);
        let folded = r.lambda.rem_euclid(0.5);
        assert!((r.eps - folded).abs() < 1e-12 || (r.eps - folded).abs() > 0.5 - 1e-12);
    }
    // Excited ε runs 0.3, 0.4, 0 (fold), 0.1, 0.2: it meets the ground ε = 0
    // at λ = 1 while Ē stays linear.
    let at_fold: Vec<&SweepRow> = rows.iter().filter(|r| (r.lambda - 1.0).abs() < 1e-12).collect();
    assert!((at_fold[0].eps - at_fold[1].eps).abs() < 1e-12);
    assert!((at_fold[1].ebar - at_fold[0].ebar - 1.0).abs() < 1e-12);
}

#[test]
fn circular_v_sweep_starts_at_static_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["sweep", "--builtin", "two_level_circular", "--sweep-param", "V", "--from", "0", "--to", "0.4", "--count", "9"],
    );
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<SweepRow> = csv_rows(&dir.path().join("sweep.csv"));
    let start: Vec<&SweepRow> = rows.iter().filter(|r| r.lambda == 0.0).collect();
    let mut ebar: Vec<f64> = start.iter().map(|r| r.ebar).collect();
    ebar.sort_by(f64::total_cmp);
    assert!((ebar[0] + 0.5).abs() < 1e-10 && (ebar[1] - 0.5).abs() < 1e-10);
    let end: Vec<&SweepRow> = rows.iter().filter(|r| r.lambda == 0.4).collect();
    assert!(end.iter().any(|r| (r.ebar + 0.265496).abs() < 1e-6 && (r.eps - 1.070156).abs() < 1e-6));
    for state in 0..2 {
        let track: Vec<&SweepRow> = rows.iter().filter(|r| r.state == state).collect();
        for w in track.windows(2) {
            assert!((w[1].ebar - w[0].ebar).abs() < 0.05, "state {state} jumps");
        }
    }
}

#[test]
fn sweep_over_unknown_parameter_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--builtin", "static", "--sweep-param", "gap", "--from", "0", "--to", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_records_failed_points_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["sweep", "--builtin", "static", "--sweep-param", "omega", "--from", "-0.5", "--to", "0.5", "--count", "3"],
    );
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<SweepRow> = csv_rows(&dir.path().join("sweep.csv"));
    assert!(rows.iter().all(|r| r.lambda == 0.5));
    let failures = std::fs::read_to_string(dir.path().join("sweep_failures.csv")).unwrap();
    assert_eq!(failures.lines().count(), 3);
}

#[test]
fn perturb_fixture_reproduces_the_contrast() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["perturb", "--fixture", "contrast"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("tracking.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("state,eps0,ebar0,eps,ebar,overlap_qorder,overlap_label"));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let q: f64 = rec[5].parse().unwrap();
        let l: f64 = rec[6].parse().unwrap();
        assert!(q <= 0.9 && l >= 0.999);
    }
}

#[test]
fn identical_runs_write_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        assert_eq!(run_in(dir, &["solve", "--builtin", "driven_ring"]).status.code(), Some(0));
        let v = run_in(dir, &["variational", "--builtin", "two_level_linear", "--seed", "7", "--excited", "1"]);
        assert_eq!(v.status.code(), Some(0));
    }
    for file in ["spectrum.json", "spectrum.csv", "variational.json", "variational.csv"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
}

#[test]
fn spectrum_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["solve", "--builtin", "two_level_linear"]).status.code(), Some(0));
    let back = read_spectrum(&dir.path().join("spectrum.json")).unwrap();
    let h = builtin_model(&ModelSpec::new("two_level_linear")).unwrap();
    assert_eq!(back, solve(&h, &SolveOptions::default()).unwrap());
}
