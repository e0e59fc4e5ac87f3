use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn demo(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(name)
}

fn gravem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gravem")).args(args).output().unwrap()
}

fn run_in(out: &TempDir, sub: &str, config: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.path().to_str().unwrap()];
    args.extend_from_slice(extra);
    gravem(&args)
}

fn edited(dir: &TempDir, from: &str, to: &str) -> PathBuf {
    let text = fs::read_to_string(demo("demos/flat.toml")).unwrap();
    assert!(text.contains(from));
    let path = dir.path().join("edited.toml");
    fs::write(&path, text.replacen(from, to, 1)).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report_value(report: &str, section: &str, key: &str) -> f64 {
    let body = report.split(&format!("[{section}]")).nth(1).unwrap();
    let line = body.lines().find(|l| l.starts_with(&format!("{key} = "))).unwrap();
    line.split(" = ").nth(1).unwrap().parse().unwrap()
}

#[test]
fn flat_equivalence_is_exact_to_roundoff() {
    let out = TempDir::new().unwrap();
    let o = run_in(&out, "equivalence-check", &demo("demos/flat.toml"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(out.path().join("equivalence_report.txt")).unwrap();
    for label in ["axial", "oblique"] {
        assert!(report_value(&report, &format!("ray {label}"), "max_deviation") <= 1e-15);
    }
    assert!(out.path().join("run.log").exists());
}

#[test]
fn strong_field_equivalence_passes() {
    let out = TempDir::new().unwrap();
    let o = run_in(&out, "equivalence-check", &demo("demos/schwarzschild_b10.toml"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn plunging_ray_is_an_error() {
    let out = TempDir::new().unwrap();
    let o = run_in(&out, "propagate", &demo("tests/fixtures/plunge.toml"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("geodesic-transport") && err.contains("outside the domain"), "{err}");
}

#[test]
fn misspelled_key_gets_a_suggestion() {
    let dir = TempDir::new().unwrap();
    let config = edited(&dir, "[metric]", "[metrric]");
    let o = run_in(&dir, "propagate", &config, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("did you mean `metric`"), "{}", stderr(&o));
}

#[test]
fn kappa_outside_the_open_interval_is_rejected() {
    let dir = TempDir::new().unwrap();
    let config = edited(&dir, "kappa = 0.5", "kappa = 0.0");
    let o = run_in(&dir, "equivalence-check", &config, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("wave.kappa") && err.contains("κ∈(0,1)"), "{err}");
}

#[test]
fn missing_config_is_an_error() {
    let out = TempDir::new().unwrap();
    let o = run_in(&out, "propagate", Path::new("/nonexistent/x.toml"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unit_scale_round_trip() {
    let out = TempDir::new().unwrap();
    let o = run_in(&out, "scale", &demo("demos/flat.toml"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let scaled = out.path().join("scaled_scenario.toml");
    let again = TempDir::new().unwrap();
    let o = run_in(&again, "scale", &scaled, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(&scaled).unwrap(),
        fs::read_to_string(again.path().join("scaled_scenario.toml")).unwrap()
    );
}

#[test]
fn impossible_tolerance_fails_checks() {
    let out = TempDir::new().unwrap();
    let o = run_in(&out, "equivalence-check", &demo("demos/flat.toml"), &["--tolerance", "1e-30"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn steps_override_sets_sample_count() {
    let out = TempDir::new().unwrap();
    let o = run_in(&out, "propagate", &demo("demos/flat.toml"), &["--steps", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = fs::read_to_string(out.path().join("ray_0.csv")).unwrap().lines().count();
    // header plus samples every 10 of 100 steps, endpoints included
    assert_eq!(rows, 12);
}

#[test]
fn every_subcommand_runs_on_the_flat_demo() {
    for sub in ["propagate", "equivalence-check", "algebra", "medium", "scale"] {
        let out = TempDir::new().unwrap();
        let o = run_in(&out, sub, &demo("demos/flat.toml"), &[]);
        assert_eq!(o.status.code(), Some(0), "{sub}: {}", String::from_utf8_lossy(&o.stdout));
    }
}
