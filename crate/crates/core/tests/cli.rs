use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use phasedeconv::io::read_density_table;
use phasedeconv::quad::trapezoid;
use serde_json::Value;

const TOY: &str = "id,rep,value\na,1,0.1\na,2,0.4\nb,1,1.2\nb,2,0.9\nc,1,-0.5\nc,2,-0.2\n";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasedeconv")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn deconvolve_toy_file_columns_integrate_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("toy.csv");
    fs::write(&input, TOY).unwrap();
    let out = dir.path().join("out");
    let res = bin(&["deconvolve", "--input", path(&input), "--out", path(&out), "--estimator", "phase,known-error,kde"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let (names, cols) = read_density_table(fs::File::open(out.join("density.csv")).unwrap()).unwrap();
    assert_eq!(names, ["x", "epf", "wepf", "known-error", "kde"]);
    for col in &cols[1..] {
        assert!(col.iter().all(|&f| f >= 0.0));
        assert!((trapezoid(&cols[0], col) - 1.0).abs() < 1e-9);
    }
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["subjects"], 3);
    assert_eq!(summary["known_variances"], false);
}

#[test]
fn density_csv_matches_json_to_twelve_digits() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("toy.csv");
    fs::write(&input, TOY).unwrap();
    let out = dir.path().join("out");
    assert!(bin(&["deconvolve", "--input", path(&input), "--out", path(&out), "--weights", "wepf"]).status.success());
    let (_, cols) = read_density_table(fs::File::open(out.join("density.csv")).unwrap()).unwrap();
    let estimates = json(&out.join("density.json"));
    let est = &estimates[0];
    assert_eq!(est["method"], "wepf");
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
    for (k, (g, v)) in est["grid"].as_array().unwrap().iter().zip(est["values"].as_array().unwrap()).enumerate() {
        assert!(close(g.as_f64().unwrap(), cols[0][k]));
        assert!(close(v.as_f64().unwrap(), cols[1][k]));
    }
}

#[test]
fn sigma_column_allows_single_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("known.csv");
    let mut text = String::from("id,rep,value,sigma\n");
    for i in 0..40 {
        let v = ((i * 37) % 23) as f64 / 5.0 - 2.0;
        text += &format!("s{i},1,{v},{}\n", if i % 2 == 0 { 0.2 } else { 0.6 });
    }
    fs::write(&input, text).unwrap();
    let out = dir.path().join("out");
    let res = bin(&["deconvolve", "--input", path(&input), "--out", path(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["known_variances"], true);
    assert!((summary["mean_sigma_sq"].as_f64().unwrap() - 0.2).abs() < 1e-12);
}

#[test]
fn missing_replicate_names_the_subject() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "id,rep,value\nfirst,1,0.1\nfirst,2,0.3\nlonely,1,1.0\n").unwrap();
    for cmd in ["deconvolve", "variances"] {
        let res = bin(&[cmd, "--input", path(&input), "--out", path(&dir.path().join("out"))]);
        assert!(!res.status.success());
        assert!(String::from_utf8_lossy(&res.stderr).contains("lonely"));
    }
}

#[test]
fn bad_row_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "id,rep,value\na,1,0.1\na,2,oops\n").unwrap();
    let res = bin(&["variances", "--input", path(&input)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"));
}

#[test]
fn simulate_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let res = bin(&[
            "simulate", "--dist", "mix1", "--case", "3", "--n", "120", "--J", "2", "--reps", "4", "--seed", "5",
            "--estimator", "phase,kde", "--workers", workers, "--out", path(&out),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        (fs::read(out.join("summary.json")).unwrap(), fs::read(out.join("replicates.csv")).unwrap())
    };
    let a = run("a", "1");
    let b = run("b", "3");
    assert_eq!(a, b);
    let summary: Value = serde_json::from_slice(&a.0).unwrap();
    assert_eq!(summary["replications"], 4);
    assert_eq!(summary["config"]["J"], 2);
    assert!(summary["kde"]["quartiles"]["median"].as_f64().unwrap() > 0.0);
    let rows = String::from_utf8(a.1).unwrap();
    assert_eq!(rows.lines().count(), 5);
}

#[test]
fn single_replication_has_no_standard_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one");
    let res = bin(&["simulate", "--n", "100", "--reps", "1", "--phase-only", "--out", path(&out)]);
    assert!(res.status.success());
    let summary = json(&out.join("summary.json"));
    assert!(summary["mise_ratio"].as_f64().unwrap() > 0.0);
    assert!(summary["se_jack"].is_null());
    assert!(summary["epf"].is_null());
}

#[test]
fn log50_density_lives_above_fifty() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.csv");
    let mut text = String::from("id,exam,M\n");
    for i in 0..60 {
        let base = 55.0 + (i * 13 % 50) as f64 * 1.7;
        for exam in 1..=3 {
            text += &format!("{i},{exam},{}\n", base + exam as f64 * 0.8);
        }
    }
    fs::write(&input, text).unwrap();
    let out = dir.path().join("out");
    let res = bin(&["analyze-log50", "--input", path(&input), "--out", path(&out), "--kde"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let (names, cols) = read_density_table(fs::File::open(out.join("density.csv")).unwrap()).unwrap();
    assert_eq!(names, ["x", "epf", "wepf", "kde"]);
    assert!(cols[0][0] > 50.0);
    for col in &cols[1..] {
        let mass = trapezoid(&cols[0], col);
        assert!((mass - 1.0).abs() < 0.02, "mass {mass}");
    }
    let (log_names, _) = read_density_table(fs::File::open(out.join("density_log.csv")).unwrap()).unwrap();
    assert_eq!(log_names, names);
}

#[test]
fn log50_rejects_values_at_the_floor() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.csv");
    fs::write(&input, "id,exam,M\n1,1,60\n1,2,61\n2,1,50\n2,2,70\n").unwrap();
    let res = bin(&["analyze-log50", "--input", path(&input), "--out", path(&dir.path().join("o"))]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains('2'));
}
