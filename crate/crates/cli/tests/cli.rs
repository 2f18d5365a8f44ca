use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tefree"))
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    rd.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SOLVE: &str = r#"{"disk": {"media": [1, 1, 1, 4]}, "scan": {"re": [1, 30], "im": [-2, 2]}}"#;

#[test]
fn solve_writes_converged_eigenvalues() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", SOLVE);
    let o = run(tmp.path(), &["solve", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let r = rows(&out.join("eigenvalues.csv"));
    assert!(!r.is_empty());
    for row in &r {
        let re: f64 = row[0].parse().unwrap();
        let residual: f64 = row[4].parse().unwrap();
        assert!((1.0..=30.0).contains(&re));
        assert!(residual <= 1e-8, "residual {residual}");
    }
    assert!(out.join("eigenvalues.json").exists());
    let svg = fs::read_to_string(out.join("eigenvalues.svg")).unwrap();
    assert!(svg.starts_with("<!-- tefree "));
}

#[test]
fn solve_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", SOLVE);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = Command::new(env!("CARGO_BIN_EXE_tefree"))
            .arg("--out")
            .arg(d)
            .args(["solve", "--config", cfg.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(o.status.success());
    }
    assert_eq!(fs::read(a.join("eigenvalues.csv")).unwrap(), fs::read(b.join("eigenvalues.csv")).unwrap());
    assert_eq!(fs::read(a.join("eigenvalues.json")).unwrap(), fs::read(b.join("eigenvalues.json")).unwrap());
}

#[test]
fn csv_numbers_round_trip_through_json() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", SOLVE);
    assert!(run(tmp.path(), &["solve", "--config", cfg.to_str().unwrap()]).status.success());
    let out = tmp.path().join("out");
    let r = rows(&out.join("eigenvalues.csv"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("eigenvalues.json")).unwrap()).unwrap();
    let arr = json.as_array().unwrap();
    assert_eq!(arr.len(), r.len());
    for (row, obj) in r.iter().zip(arr) {
        assert_eq!(row[0].parse::<f64>().unwrap(), obj["re_lambda"].as_f64().unwrap());
        assert_eq!(row[4].parse::<f64>().unwrap(), obj["residual"].as_f64().unwrap());
    }
}

#[test]
fn equal_contrast_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", r#"{"disk": {"media": [1, 1, 1, 1]}, "scan": {"re": [1, 30], "im": [-2, 2]}}"#);
    let o = run(tmp.path(), &["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("contrast condition violated"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").join("eigenvalues.csv").exists());
}

#[test]
fn malformed_config_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", r#"{"disk": {"media": [1, 1, 1, 4]}, "scna": {}}"#);
    let o = run(tmp.path(), &["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(tmp.path(), &["solve", "--config", "/nonexistent/c.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(tmp.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eigenvalue_free_rectangle_gives_empty_table() {
    // Far inside the eigenvalue-free region above the right half axis.
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", r#"{"disk": {"media": [1, 1, 1, 4]}, "scan": {"re": [0, 1], "im": [50, 60]}}"#);
    let o = run(tmp.path(), &["solve", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = tmp.path().join("out").join("eigenvalues.csv");
    assert!(rows(&csv).is_empty());
    assert_eq!(fs::read_to_string(csv).unwrap(), "re_lambda,im_lambda,mode,multiplicity,residual,newton_iters\n");
}

#[test]
fn regions_on_empty_input() {
    let tmp = TempDir::new().unwrap();
    let eigs = config(tmp.path(), "e.csv", "re_lambda,im_lambda\n");
    let o = run(tmp.path(), &["regions", "--eigs", eigs.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("no eigenvalues"));
}

#[test]
fn regions_rejects_bad_numbers() {
    let tmp = TempDir::new().unwrap();
    let eigs = config(tmp.path(), "e.csv", "re_lambda,im_lambda\n1.0,abc\n");
    let o = run(tmp.path(), &["regions", "--eigs", eigs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn synthetic(beta: f64) -> String {
    let mut s = String::from("re_lambda,im_lambda\n");
    for i in 0..400 {
        let x = 10f64.powf(1.0 + 3.0 * i as f64 / 399.0);
        let y = 0.5 * (x + 1.0).powf(beta);
        s.push_str(&format!("{x:e},{y:e}\n{x:e},{:e}\n", -y));
    }
    s
}

#[test]
fn regions_recovers_a_synthetic_exponent() {
    let tmp = TempDir::new().unwrap();
    let eigs = config(tmp.path(), "e.csv", &synthetic(0.6));
    let o = run(tmp.path(), &["regions", "--eigs", eigs.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("exponent_fit <= 0.8+0.05: PASS"), "{text}");
    let beta: f64 = text
        .lines()
        .find(|l| l.starts_with("exponent_fit Re >= 0"))
        .and_then(|l| l.split("beta = ").nth(1))
        .and_then(|r| r.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((beta - 0.6).abs() < 0.02, "beta {beta}");
    let out = tmp.path().join("out");
    assert_eq!(rows(&out.join("regions.csv")).len(), 800);
    assert!(out.join("regions_report.txt").exists());
    assert!(fs::read_to_string(out.join("regions.svg")).unwrap().contains("<polyline"));
}

#[test]
fn regions_flags_a_steep_envelope() {
    let tmp = TempDir::new().unwrap();
    let eigs = config(tmp.path(), "e.csv", &synthetic(0.95));
    let o = run(tmp.path(), &["regions", "--eigs", eigs.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("exponent_fit <= 0.8+0.05: FAIL"));
}

const SEMICLASSICAL: &str = r#"{
  "disk": {"media": [1, 1, 2, 1]},
  "semiclassical": {
    "h": [0.125, 0.0625, 0.03125, 0.015625],
    "z": [{"re": -1, "im": 0.5}, {"re": 1, "im": 0.5}],
    "composition": {"max_mode": 24}
  }
}"#;

#[test]
fn dtn_check_converges_at_first_order() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", SEMICLASSICAL);
    let o = run(tmp.path(), &["dtn-check", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let r = rows(&out.join("dtn_check.csv"));
    let slopes: Vec<&Vec<String>> = r.iter().filter(|row| row[3] == "slope").collect();
    assert_eq!(slopes.len(), 2);
    for s in slopes {
        let rho: f64 = s[5].parse().unwrap();
        let hb: f64 = s[6].parse().unwrap();
        assert!(rho >= 0.9, "slope {rho}");
        assert!(hb >= 1.8, "corrected slope {hb}");
    }
    // Constant coefficients compose exactly.
    for row in rows(&out.join("composition.csv")).iter().filter(|r| r[3] != "slope") {
        assert!(row[5].parse::<f64>().unwrap() < 1e-10);
    }
}

#[test]
fn parametrix_check_ratios_stay_bounded() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", SEMICLASSICAL);
    let o = run(tmp.path(), &["parametrix-check", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let r = rows(&out.join("parametrix_check.csv"));
    for row in r.iter().filter(|row| row[3] == "slope") {
        for v in &row[4..] {
            assert!(v.parse::<f64>().unwrap().abs() < 0.1, "ratio drifts: {row:?}");
        }
    }
    for row in rows(&out.join("phase_bound.csv")) {
        assert_eq!(row[4], "true");
    }
}

#[test]
fn count_matches_weyl_on_the_negative_axis() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", r#"{"disk": {"media": [1, 4, 2, 1]}, "counting": {"r": [5, 10, 15]}}"#);
    let o = run(tmp.path(), &["count", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&tmp.path().join("out").join("count.csv"));
    let last = &r[2];
    let neg_ratio: f64 = last[6].parse().unwrap();
    assert!((neg_ratio - 1.0).abs() <= 0.15, "N- ratio {neg_ratio}");
    let counts: Vec<f64> = r[..3].iter().map(|row| row[1].parse().unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
}
