use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torus-shape"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("TORUS_SHAPE_OUT")
        .output()
        .expect("binary runs")
}

fn summary(out: &Path, command: &str) -> Value {
    let text = std::fs::read_to_string(out.join(format!("{command}_summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn assert_schema(v: &Value) {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/summary.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn validate_axisym_passes_and_matches_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["validate-axisym", "--grid", "16"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path(), "validate_axisym");
    assert_eq!(s["pass"], Value::Bool(true));
    assert_schema(&s);
    let csv = std::fs::read_to_string(dir.path().join("validate_axisym.csv")).unwrap();
    assert!(csv.starts_with("check,value,bound,kind,pass\n"));
}

#[test]
fn malformed_surface_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let surf = dir.path().join("bad.toml");
    std::fs::write(&surf, "[[mode]]\nm = 1\nn = \"zero\"\n").unwrap();
    let o = run(dir.path(), &["harmonic", "--surface", surf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("surface"));
}

#[test]
fn surface_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let surf = dir.path().join("torus.toml");
    std::fs::write(
        &surf,
        "[[mode]]\nm = 1\nn = 0\ncos = [2.0, 0.0, 0.0]\nsin = [0.0, 2.0, 0.0]\n\
         [[mode]]\nm = 1\nn = 1\ncos = [0.5, 0.0, 0.0]\nsin = [0.0, 0.5, 0.0]\n\
         [[mode]]\nm = 1\nn = -1\ncos = [0.5, 0.0, 0.0]\nsin = [0.0, 0.5, 0.0]\n\
         [[mode]]\nm = 0\nn = 1\ncos = [0.0, 0.0, 0.0]\nsin = [0.0, 0.0, 1.0]\n",
    )
    .unwrap();
    let o = run(dir.path(), &["poincare", "--grid", "16", "--surface", surf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path(), "poincare");
    assert!(s["scalars"]["max_abs_displacement"].as_f64().unwrap() < 1e-10);
    assert_schema(&s);
    let csv = std::fs::read_to_string(dir.path().join("poincare_map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);
    assert_eq!(csv.lines().next().unwrap(), "theta[turn],Pi[turn],Pi_minus_theta[turn]");
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["shape-derivative", "--surface", "perturbed", "--grid", "16", "--deformation", "random:9", "--seed", "5"];
    assert_eq!(run(a.path(), &args).status.code(), Some(0));
    assert_eq!(run(b.path(), &[&args[..], &["--threads", "1"]].concat()).status.code(), Some(0));
    for f in ["shape_derivative_0.csv", "shape_derivative_summary.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn validate_fd_reports_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["validate-fd", "--grid", "16", "--count", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let s = summary(dir.path(), "validate_fd");
    let order = s["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "observed_order_0")
        .unwrap()["value"]
        .as_f64()
        .unwrap();
    assert!(order >= 1.9);
    assert_schema(&s);
}

#[test]
fn failed_checks_exit_with_acceptance_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.toml");
    std::fs::write(&cfg, "[tolerances]\nfield = 1e-30\n").unwrap();
    let o = run(dir.path(), &["validate-axisym", "--grid", "16", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stdout));
    let s = summary(dir.path(), "validate_axisym");
    assert_eq!(s["pass"], Value::Bool(false));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL field_sup_relative_error"));
}

#[test]
fn rational_rotation_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["cohomology", "--omega", "0.4"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_and_env_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "grid = 16\nseed = 4\n[integrator]\nrtol = 1e-10\n").unwrap();
    let out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_torus-shape"))
        .args(["rotation", "--omega", "0.25", "--config", cfg.to_str().unwrap()])
        .env("TORUS_SHAPE_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&out, "rotation");
    assert_eq!(s["run"]["grid"][0], 16);
    assert_eq!(s["run"]["seed"], 4);
    assert!((s["scalars"]["rotation_number"].as_f64().unwrap() - 0.25).abs() < 1e-6);
    assert_schema(&s);
    std::fs::write(&cfg, "grid = 15\n").unwrap();
    let o = run(dir.path(), &["rotation", "--omega", "0.25", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
