use std::path::{Path, PathBuf};
use std::process::Command;

use l1weak_cli::{dispatch, parse_matrix, ReportBundle};
use l1weak_core::{alpha_w, Regime};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_l1weak"))
}

fn run_ok(args: &[&str]) -> ReportBundle {
    let argv = std::iter::once("l1weak").chain(args.iter().copied());
    let (code, bundle) = dispatch(argv);
    assert_eq!(code, 0, "{args:?}");
    bundle.expect("successful runs return a bundle")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(bundle: &ReportBundle) -> Value {
    serde_json::from_str(&bundle.json).unwrap()
}

#[test]
fn single_beta_gives_one_row() {
    let out = bin().args(["threshold", "--beta", "0.5"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "beta,theta_hat,alpha_w");
    let aw = alpha_w(Regime::General, 0.5).unwrap().alpha;
    assert_eq!(lines[1], format!("0.5,{aw:?},{aw:?}"));
    assert!(out.stderr.is_empty());
}

#[test]
fn signed_curve_with_plot() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("out.svg");
    let csv = dir.path().join("out.csv");
    let b = run_ok(&[
        "threshold", "--beta-min", "0.05", "--beta-max", "0.95", "--steps", "19", "--signed",
        "--svg", svg.to_str().unwrap(), "--out", csv.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text, b.csv.clone().unwrap());
    assert_eq!(text.lines().count(), 20);
    let plot = std::fs::read_to_string(&svg).unwrap();
    assert!(plot.contains(r#"width="800" height="600""#));
    let start = plot.find(r#"<polyline id="theory" points=""#).unwrap();
    let points = plot[start..].split('"').nth(3).unwrap();
    assert_eq!(points.split(' ').count(), 19);
    let report = json(&b);
    assert_eq!(report["metadata"]["regime"], "signed");
    assert_eq!(report["points"].as_array().unwrap().len(), 19);
}

#[test]
fn threshold_csv_round_trips() {
    for regime in ["general", "signed"] {
        let mut args = vec![
            "threshold", "--beta-min", "0.05", "--beta-max", "0.95", "--steps", "19", "--out", "/dev/null",
        ];
        let r = if regime == "signed" {
            args.push("--signed");
            Regime::Signed
        } else {
            Regime::General
        };
        let b = run_ok(&args);
        let csv = b.csv.unwrap();
        let body: String = csv.lines().skip(1).map(|l| format!("{l}\n")).collect();
        let table = parse_matrix(&body).unwrap();
        for i in 0..table.rows() {
            let row = table.row(i);
            let again = alpha_w(r, row[0]).unwrap().alpha;
            assert!((again - row[2]).abs() <= 1e-12, "{regime} beta {}", row[0]);
        }
    }
}

#[test]
fn bounds_in_json_follow_eps() {
    let quiet = |extra: &[&'static str]| {
        let mut args = vec!["threshold", "--beta", "0.3", "--out", "/dev/null"];
        args.extend_from_slice(extra);
        run_ok(&args)
    };
    let tight = json(&quiet(&[]));
    let p = &tight["points"][0];
    let aw = p["alpha_w"].as_f64().unwrap();
    assert!((p["alpha_lower"].as_f64().unwrap() - aw).abs() <= 1e-9);
    assert!((p["alpha_upper"].as_f64().unwrap() - aw).abs() <= 1e-9);

    let loose = quiet(&["--eps1-c", "0.01", "--eps1-m", "0.01"]);
    let q = &json(&loose)["points"][0];
    // Slack pushes the success bound above α_w and the failure bound below it.
    assert!(q["alpha_upper"].as_f64().unwrap() < aw);
    assert!(q["alpha_lower"].as_f64().unwrap() > aw);
    // The CSV only carries the ε = 0 threshold.
    assert_eq!(loose.csv, quiet(&[]).csv);
}

#[test]
fn nonneg_recovery_with_identity_echoes_y() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "A.csv", "1,0,0\n0,1,0\n0,0,1\n");
    let y = write(dir.path(), "y.csv", "0.5\n2\n0\n");
    let b = run_ok(&[
        "recover", "--matrix", a.to_str().unwrap(), "--y", y.to_str().unwrap(), "--nonneg",
        "--out", dir.path().join("x.csv").to_str().unwrap(),
    ]);
    let report = json(&b);
    let x: Vec<f64> = serde_json::from_value(report["x_hat"].clone()).unwrap();
    for (got, want) in x.iter().zip([0.5, 2.0, 0.0]) {
        assert!((got - want).abs() <= 1e-6, "{x:?}");
    }
    assert!(b.csv.unwrap().starts_with("index,x_hat\n1,"));
    assert_eq!(report["metadata"]["regime"], "signed");
}

#[test]
fn tau_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "A.csv", "1,1,1,1\n");
    let out = dir.path().join("tau.json");
    let b = run_ok(&[
        "tau", "--matrix", a.to_str().unwrap(), "--support", "1,3", "--signs", "1,-1",
        "--json", out.to_str().unwrap(),
    ]);
    assert!(b.csv.is_none());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), b.json);
    let r = json(&b);
    for key in [
        "tau", "z", "nu", "w", "iterations", "converged", "gap", "verdict", "sphere_min", "tol",
        "verified", "support", "signs", "metadata",
    ] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["support"], serde_json::json!([1, 3]));
    assert_eq!(r["verified"], true);
    let verdict = r["verdict"].as_str().unwrap();
    assert!(["certified_success", "certified_failure", "inconclusive"].contains(&verdict));
}

#[test]
fn tau_without_json_prints_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "A.csv", "1,0\n0,1\n");
    let out = bin()
        .args(["tau", "--matrix", a.to_str().unwrap(), "--support", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["verdict"], "certified_success");
}

#[test]
fn phase_outputs_ignore_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for threads in ["1", "2", "0"] {
        let svg = dir.path().join(format!("p{threads}.svg"));
        let b = run_ok(&[
            "phase", "--n", "40", "--alpha-grid", "0.3:0.7:3", "--beta-grid", "0.1:0.6:2",
            "--trials", "5", "--seed", "11", "--threads", threads,
            "--out", dir.path().join("p.csv").to_str().unwrap(),
            "--svg", svg.to_str().unwrap(),
        ]);
        runs.push(b);
    }
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
    let b = &runs[0];
    let csv = b.csv.as_ref().unwrap();
    assert!(csv.starts_with("alpha,beta,m,k,trials,successes,rate\n"));
    // Two of the six cells have k ≥ m and are left out of the table.
    assert_eq!(csv.lines().count(), 1 + 4);
    let r = json(b);
    assert_eq!(r["cells"].as_array().unwrap().len(), 6);
    assert_eq!(r["metadata"]["seed"], 11);
    assert!(r["metadata"].get("threads").is_none());
    assert!(b.svg.as_ref().unwrap().contains(r#"id="theory""#));
}

#[test]
fn phase_seed_changes_results() {
    let args = |seed: &'static str| {
        run_ok(&[
            "phase", "--n", "30", "--alpha-grid", "0.3:0.5:2", "--beta-grid", "0.1:0.2:2",
            "--trials", "8", "--seed", seed, "--out", "/dev/null",
        ])
    };
    assert_eq!(args("1"), args("1"));
    assert_ne!(args("1").json, args("2").json);
}

#[test]
fn framework_outputs_ignore_threads() {
    let run = |threads: &str| {
        run_ok(&[
            "framework", "--n", "1000", "--beta", "0.3", "--samples", "12", "--seed", "4",
            "--threads", threads, "--out", "/dev/null",
        ])
    };
    let one = run("1");
    assert_eq!(one, run("3"));
    let csv = one.csv.as_ref().unwrap();
    assert!(csv.starts_with("n,beta,samples,alpha_estimate,cw_over_n\n1000,0.3,12,"));
    let r = json(&one);
    assert_eq!(r["k"], 300);
    assert_eq!(r["metadata"]["flags"]["head_z"], "ones");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["bogus"],
        vec!["threshold"],
        vec!["threshold", "--beta", "0.5", "--steps", "3"],
        vec!["threshold", "--beta", "1.5"],
        vec!["threshold", "--beta", "0.5", "--eps1-c", "0.2"],
        vec!["phase", "--n", "40", "--alpha-grid", "0.5:0.3:3", "--beta-grid", "0.1:0.2:2", "--trials", "2", "--seed", "1"],
        vec!["phase", "--n", "40", "--alpha-grid", "0.3:0.5:3", "--beta-grid", "0.1:0.2:2", "--trials", "2"],
        vec!["framework", "--n", "100", "--beta", "0.3", "--samples", "2", "--seed", "1"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn bad_input_files_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = write(dir.path(), "A.csv", "1,2\n3\n");
    let y = write(dir.path(), "y.csv", "1\n1\n");
    let missing = dir.path().join("nope.csv");
    for a in [&ragged, &missing] {
        let out = bin()
            .args(["recover", "--matrix", a.to_str().unwrap(), "--y", y.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(1));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("l1weak: "));
    }
    let a = write(dir.path(), "B.csv", "1,0\n0,1\n");
    let short_y = write(dir.path(), "y1.csv", "1\n");
    let out = bin()
        .args(["recover", "--matrix", a.to_str().unwrap(), "--y", short_y.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = bin().args(["phase", "--help"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("--alpha-grid"));
}
