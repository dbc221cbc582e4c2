use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use convex_billiards::linalg::{symplectic_form, Matrix};
use serde_json::Value;
use tempfile::TempDir;

const ELLIPSE: &str = r#"{"dim":2,"base":{"type":"ellipsoid","semi_axes":[2.0,1.0]}}"#;
const CIRCLE: &str = r#"{"dim":2,"base":{"type":"ellipsoid","semi_axes":[1.0,1.0]}}"#;
const BUMPED: &str = r#"{"dim":2,"base":{"type":"ellipsoid","semi_axes":[1.6,1.0]},
  "bumps":[{"chart":0,"center":[0.15],"radius":0.8,"hessian":[[0.1]]}]}"#;

const THREAD_CAP: &str = "BILLIARDS_MAX_THREADS";

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, contents).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_billiards")).args(args).current_dir(self.dir.path()).output().unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn circle_trace_keeps_the_angle() {
    let w = Workspace::new();
    let body = w.file("circle.json", CIRCLE);
    let o = w.run(&["trace", "--body", body.to_str().unwrap(), "--out", "t", "--n", "100", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(w.path("t/trace.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "cos_angle").unwrap();
    let cos: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(cos.len(), 100);
    assert!(cos.iter().all(|c| (c - cos[0]).abs() < 1e-12));
}

#[test]
fn zero_bounces_give_a_header_only_csv() {
    let w = Workspace::new();
    let body = w.file("circle.json", CIRCLE);
    let o = w.run(&["trace", "--body", body.to_str().unwrap(), "--out", "t", "--n", "0"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(w.path("t/trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("step,chart,s0,p0,p1,v0,v1,cos_angle,tau"));
}

#[test]
fn missing_body_is_an_input_error() {
    let w = Workspace::new();
    let o = w.run(&["trace", "--body", "nowhere.json", "--out", "t"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.json"));
}

#[test]
fn grazing_start_gives_partial_output() {
    let w = Workspace::new();
    let body = w.file("circle.json", CIRCLE);
    // Tangent to the circle up to 1e-10 in the normal direction.
    let start = w.file("start.json", r#"{"chart":1,"coords":[0.0],"v":[1e-10,1.0]}"#);
    let o = w.run(&["trace", "--body", body.to_str().unwrap(), "--out", "t", "--n", "10", "--start", start.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&w.path("t/trace.json"));
    assert!(summary["steps"].as_u64().unwrap() < 10);
    assert!(summary["truncated"].is_string());
}

#[test]
fn ellipse_two_orbits_are_classified() {
    let w = Workspace::new();
    let body = w.file("ellipse.json", ELLIPSE);
    let o = w.run(&["orbits", "--body", body.to_str().unwrap(), "--out", "o", "--period", "2"]);
    assert_eq!(code(&o), 0);
    let rows = json(&w.path("o/orbits.json"));
    let mut classes: Vec<&str> = rows.as_array().unwrap().iter().map(|r| r["class"].as_str().unwrap()).collect();
    classes.sort();
    assert_eq!(classes, ["1-elliptic", "hyperbolic"]);
    for r in rows.as_array().unwrap() {
        assert!(num(&r["residual"]) < 1e-9);
        assert_eq!(r["points"].as_array().unwrap().len(), 2);
        assert_eq!(r["eigenvalues"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn circle_orbits_are_never_hyperbolic() {
    let w = Workspace::new();
    let body = w.file("circle.json", CIRCLE);
    let o = w.run(&["orbits", "--body", body.to_str().unwrap(), "--out", "o", "--period", "2..8"]);
    assert_eq!(code(&o), 0);
    let rows = json(&w.path("o/orbits.json"));
    assert!(!rows.as_array().unwrap().is_empty());
    assert!(rows.as_array().unwrap().iter().all(|r| r["class"] != "hyperbolic"));
}

#[test]
fn empty_seed_budget_gives_an_empty_table() {
    let w = Workspace::new();
    let body = w.file("ellipse.json", ELLIPSE);
    let o = w.run(&["orbits", "--body", body.to_str().unwrap(), "--out", "o", "--n", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&w.path("o/orbits.json")), Value::Array(vec![]));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 1);
}

#[test]
fn franks_round_trip_on_a_bumped_ellipse() {
    let w = Workspace::new();
    let body = w.file("bumped.json", BUMPED);
    let b = body.to_str().unwrap();
    let o = w.run(&["franks", "--body", b, "--out", "scan"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let scan = json(&w.path("scan/admissibility.json"));
    assert_eq!(scan["admissibility"]["holds"], true);
    let rows: Vec<Vec<f64>> = serde_json::from_value(scan["monodromy"].clone()).unwrap();
    let m = Matrix::from_fn(2, 2, |i, j| rows[i][j]);
    let s = Matrix::from_row_slice(2, 2, &[0.3, -0.2, -0.2, 0.5]);
    let target = &m * (-(symplectic_form(1) * s) * 0.01).exp();
    let t: Vec<Vec<f64>> = target.row_iter().map(|r| r.iter().copied().collect()).collect();
    let tfile = w.file("target.json", &serde_json::to_string(&t).unwrap());

    let o = w.run(&["franks", "--body", b, "--out", "real", "--target", tfile.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&w.path("real/realization.json"));
    assert!(num(&rep["monodromy_error"]) < 1e-7, "{}", rep["monodromy_error"]);
    assert!(num(&rep["point_drift"]) < 1e-10);
    assert_eq!(rep["bumps"].as_array().unwrap().len(), 4);
    let spec = json(&w.path("real/body.json"));
    assert_eq!(spec["bumps"].as_array().unwrap().len(), 5);
}

#[test]
fn franks_refusals() {
    let w = Workspace::new();
    let body = w.file("bumped.json", BUMPED);
    let b = body.to_str().unwrap();
    let bad = w.file("bad.json", "[[2.0, 0.0], [0.0, 2.0]]");
    let o = w.run(&["franks", "--body", b, "--out", "x", "--target", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not symplectic"));

    let o = w.run(&["franks", "--body", b, "--out", "y", "--tol", "1e6"]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("no F-admissible window") && err.contains("omega="), "{err}");
}

#[test]
fn donnay_pipeline_on_the_ellipse() {
    let w = Workspace::new();
    let body = w.file("ellipse.json", ELLIPSE);
    let o = w.run(&["donnay", "--body", body.to_str().unwrap(), "--out", "d"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let before = json(&w.path("d/datum.json"));
    assert_eq!(before["coincident"], true);
    assert!(num(&before["angle"]) < 1e-6);
    let rep = json(&w.path("d/transversality.json"));
    assert_eq!(rep["transverse"], true);
    assert!(num(&rep["margin"]) > 0.0);
    assert!(num(&rep["angle_after"]) > 1e-3);
    assert!(num(&rep["orbit_drift"]) < 1e-10);
    let eps = num(&rep["epsilon"]);
    assert!(eps > 0.0 && eps < num(&rep["epsilon0"]));
    let spec = json(&w.path("d/body.json"));
    assert_eq!(spec["bumps"].as_array().unwrap().len(), 1);
    let curves = fs::read_to_string(w.path("d/manifolds.csv")).unwrap();
    assert!(curves.starts_with("side,sign,level,theta,u\n"));
    assert!(curves.lines().count() > 1000);

    // The perturbed body feeds the entropy command next to the split connection.
    let o = w.run(&[
        "entropy", "--body", "d/body.json", "--out", "e", "--n", "2", "--steps", "20000", "--datum", "d/datum.json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ent = json(&w.path("e/entropy.json"));
    assert!(num(&ent["lyapunov"]["ci_low"]) > 0.0);
}

#[test]
fn donnay_refusals() {
    let w = Workspace::new();
    let body = w.file("ellipse.json", ELLIPSE);
    let o = w.run(&["donnay", "--body", body.to_str().unwrap(), "--out", "d", "--epsilon", "10"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("epsilon_bound"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refused"));

    let circle = w.file("circle.json", CIRCLE);
    let o = w.run(&["donnay", "--body", circle.to_str().unwrap(), "--out", "c"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no hyperbolic orbits"));
}

#[test]
fn entropy_single_row_for_period_two() {
    let w = Workspace::new();
    let body = w.file("ellipse.json", ELLIPSE);
    let o = w.run(&["entropy", "--body", body.to_str().unwrap(), "--out", "e", "--n", "2", "--steps", "500"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(w.path("e/entropy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("2,2,"));
}

#[test]
fn thread_cap_and_flags_do_not_change_output() {
    let w = Workspace::new();
    let body = w.file("ellipse.json", ELLIPSE);
    let b = body.to_str().unwrap();
    let a = w.run(&["orbits", "--body", b, "--out", "a", "--period", "2..5", "--threads", "4"]);
    let c = Command::new(env!("CARGO_BIN_EXE_billiards"))
        .args(["orbits", "--body", b, "--out", "c", "--period", "2..5", "--threads", "4"])
        .env(THREAD_CAP, "1")
        .current_dir(w.path(""))
        .output()
        .unwrap();
    assert_eq!(code(&a), 0);
    assert_eq!(code(&c), 0);
    assert_eq!(fs::read(w.path("a/orbits.json")).unwrap(), fs::read(w.path("c/orbits.json")).unwrap());
}
