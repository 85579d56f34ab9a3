use std::path::Path;
use std::process::{Command, Output};

fn dini(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dini")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn families_lists_generators_and_bundles() {
    let o = dini(&["families"]);
    assert!(o.status.success());
    let s = stdout(&o);
    for name in ["constant", "holder", "dini-log", "non-dini-log", "flat-laplace", "tilted-parabolic"] {
        assert!(s.contains(name), "{s}");
    }
}

#[test]
fn check_accepts_json_and_toml_with_the_same_hash() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("s.json");
    let toml = dir.path().join("s.toml");
    std::fs::write(&json, r#"{"schema_version": 1, "name": "s", "grids": [16], "pipeline": ["solve"]}"#).unwrap();
    std::fs::write(&toml, "schema_version = 1\nname = \"s\"\ngrids = [16]\npipeline = [\"solve\"]\n").unwrap();
    let (a, b) = (dini(&["check", json.to_str().unwrap()]), dini(&["check", toml.to_str().unwrap()]));
    assert!(a.status.success() && b.status.success());
    let hash = |o: &Output| stdout(o).split("hash ").nth(1).unwrap().trim().to_string();
    assert_eq!(hash(&a), hash(&b));
}

#[test]
fn bad_schema_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    std::fs::write(&f, r#"{"schema_version": 9, "name": "bad"}"#).unwrap();
    let o = dini(&["check", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema version"));
}

#[test]
fn empty_scenario_exits_zero_with_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("empty.json");
    std::fs::write(&f, r#"{"schema_version": 1, "name": "empty"}"#).unwrap();
    let out = dir.path().join("out");
    let o = dini(&["run", f.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("empty/report.json")).unwrap()).unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 0);
    assert_eq!(report["pass"], true);
}

#[test]
fn failing_check_exits_one_and_report_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("fail.json");
    std::fs::write(
        &f,
        r#"{"schema_version": 1, "name": "fail", "grids": [16], "pipeline": ["solve"],
            "coefficients": {"family": "holder", "alpha": 0.5, "amplitude": 0.2},
            "checks": [{"check": "solve-error", "max": 0.0}]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = dini(&["--jobs", "1", "run", f.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.join("fail/solve/errors.csv").is_file());
    let r = dini(&["report", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stdout(&r).contains("[FAIL] solve-error"));
    assert!(out.join("summary.txt").is_file());
}

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for stage in std::fs::read_dir(dir).unwrap().flatten().filter(|e| e.path().is_dir()) {
        for f in std::fs::read_dir(stage.path()).unwrap().flatten() {
            let p = f.path();
            if p.extension().is_some_and(|e| e == "csv") {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn bundled_flat_laplace_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = dini(&["run", "flat-laplace", "--out", d.to_str().unwrap(), "--seed", "3"]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let (x, y) = (csv_bodies(&a.join("flat-laplace")), csv_bodies(&b.join("flat-laplace")));
    assert!(!x.is_empty());
    assert_eq!(x, y);
}

#[test]
fn grid_override_replaces_grids() {
    let dir = tempfile::tempdir().unwrap();
    let o = dini(&["run", "flat-laplace", "--out", dir.path().to_str().unwrap(), "--grid-override", "128"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let errs = std::fs::read_to_string(dir.path().join("flat-laplace/solve/errors.csv")).unwrap();
    assert_eq!(errs.lines().count(), 2);
}
