use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BASE: &str = r#"[problem]
dim = 1
period = 6.283185307179586
order = 0.5
mass = 1.0
cutoff = 16
grid = 64

[nonlinearity]
label = "log_superlinear"

[checks]
samples = 200
fields = 10
"#;

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run(verb: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracperiodic"))
        .arg(verb)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn value_of(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap();
    line[key.len()..].trim().parse().unwrap()
}

#[test]
fn describe_prints_derived_constants() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, BASE);
    let o = run("describe", &cfg, &dir.path().join("out"), &[]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(value_of(&text, "omega"), 1.0);
    assert!((value_of(&text, "kappa_s") - 1.0).abs() < 1e-12);
    assert_eq!(value_of(&text, "m0 = omega^(2s)/2"), 0.5);
    for key in ["C_m", "r ", "rho", "K1", "K2"] {
        assert!(value_of(&text, key) > 0.0, "{key}");
    }
    assert!(!dir.path().join("out").exists(), "describe writes nothing");
}

#[test]
fn verify_kernel_emits_kappa_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, BASE);
    let out = dir.path().join("out");
    let o = run("verify-kernel", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let table = fs::read_to_string(out.join("kappa.csv")).unwrap();
    let mut lines = table.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert_eq!(lines.next().unwrap(), "method,value,relative_error");
    assert_eq!(lines.count(), 3);
    let kernel = read_json(out.join("kernel.json"));
    assert!((kernel["kappa"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(kernel["meta"]["config_hash"].as_str().unwrap().len(), 64);
    assert!(out.join("profile.csv").exists() && out.join("cylinder.csv").exists());
}

#[test]
fn zero_control_fails_to_converge() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &BASE.replace("log_superlinear", "zero"));
    let out = dir.path().join("out");
    let o = run("solve", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(4));
    let sol = read_json(out.join("solution.json"));
    assert!(sol["error"].as_str().unwrap().contains("trivial"));
    assert_eq!(sol["degenerate"], Value::Bool(true));
}

#[test]
fn solve_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, BASE);
    let a = run("solve", &cfg, &dir.path().join("a"), &[]);
    let b = run("solve", &cfg, &dir.path().join("b"), &[]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(b.status.code(), Some(0));
    for name in ["solution.json", "geometry.json", "trace.csv"] {
        let x = fs::read(dir.path().join("a").join(name)).unwrap();
        let y = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let sol = read_json(dir.path().join("a/solution.json"));
    assert_eq!(sol["converged"], Value::Bool(true));
    assert!(sol["weak_residual"].as_f64().unwrap() < 1e-4);
}

#[test]
fn continuation_levels_stay_in_bracket() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, BASE);
    let out = dir.path().join("out");
    let o = run("continue", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rep = read_json(out.join("continuation.json"));
    let k1 = rep["bounds"]["k1"].as_f64().unwrap();
    let k2 = rep["bounds"]["k2"].as_f64().unwrap();
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(2).collect();
    assert_eq!(rows.len(), 7, "six masses and the limit");
    for row in &rows[..6] {
        let alpha: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(k1 <= alpha && alpha <= k2, "{alpha} outside [{k1}, {k2}]");
    }
    assert!(out.join("fields/step_05.json").exists());
}

#[test]
fn seed_is_recorded_and_changes_random_checks() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, BASE);
    let a = run("verify-dtn", &cfg, &dir.path().join("a"), &["--seed", "7"]);
    let b = run("verify-dtn", &cfg, &dir.path().join("b"), &["--seed", "8"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(b.status.code(), Some(0));
    let ja = read_json(dir.path().join("a/dtn.json"));
    let jb = read_json(dir.path().join("b/dtn.json"));
    assert_eq!(ja["meta"]["seed"], 7);
    assert_eq!(jb["meta"]["seed"], 8);
    assert_ne!(ja["meta"]["config_hash"], jb["meta"]["config_hash"]);
    assert_ne!(ja["min_strip_slack"], jb["min_strip_slack"]);
}

#[test]
fn critical_growth_is_a_property_violation() {
    let dir = TempDir::new().unwrap();
    let body = BASE
        .replace("dim = 1", "dim = 2")
        .replace("cutoff = 16", "cutoff = 4")
        .replace("grid = 64", "grid = 16")
        .replace("log_superlinear", "pure_power(3)");
    let cfg = write_config(&dir, &body);
    let out = dir.path().join("out");
    let o = run("check-hypotheses", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    let rep = read_json(out.join("hypotheses.json"));
    let f4 = rep["checks"].as_array().unwrap().iter().find(|c| c["name"] == "f4").unwrap();
    assert_eq!(f4["verdict"], "fail");
}

#[test]
fn config_errors_name_line_and_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &BASE.replace("order = 0.5", "order = 1.5"));
    let o = run("solve", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("run.toml:4:") && err.contains("problem.order"), "{err}");

    let cfg = write_config(&dir, &format!("{BASE}\n[solver]\ncerami_tol = -1.0\n"));
    let o = run("solve", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("solver.cerami_tol"));

    let o = run("solve", &dir.path().join("missing.toml"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tol_flag_overrides_solver_tolerance() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, BASE);
    let o = run("describe", &cfg, &dir.path().join("out"), &["--tol", "1e-6"]);
    let plain = run("describe", &cfg, &dir.path().join("out"), &[]);
    let hash = |o: &Output| stdout(o).lines().find(|l| l.starts_with("config hash")).unwrap().to_string();
    assert_ne!(hash(&o), hash(&plain));
    let o = run("describe", &cfg, &dir.path().join("out"), &["--tol", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}
