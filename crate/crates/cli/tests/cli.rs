use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use muonkit::verify::CHECK_NAMES;
use serde_json::Value;

fn muonkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muonkit"))
        .args(args)
        .output()
        .unwrap()
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn config(problem: &str, lr: &str, steps: usize, replicas: usize, out: &Path) -> String {
    format!(
        r#"
[problem]
{problem}

[optimizer]
beta = 0.9

[lr]
{lr}

[bs]
kind = "constant"
b = 1

[run]
steps = {steps}
replicas = {replicas}
base_seed = 5
output_dir = {out:?}
"#
    )
}

const NOISELESS: &str = "kind = \"matrix_quadratic\"\ncomponents = 1\nrows = 8\ncols = 4\nseed = 3";
const REFERENCE: &str =
    "kind = \"matrix_quadratic\"\ncomponents = 256\nrows = 8\ncols = 4\nseed = 7";

fn read_report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn single_noiseless_replica_mean_curve_is_the_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        &config(NOISELESS, "kind = \"constant\"\neta = 0.05", 60, 1, &out),
    );
    let o = muonkit(&["run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = std::fs::read_to_string(out.join("replica_0000.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,eta,b,loss,grad_norm,momentum_gap,nesterov_gap,ortho_defect"
    );
    let norms: Vec<f64> = lines
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(norms.len(), 60);

    let report = read_report(&out);
    let curve: Vec<f64> = report["mean_curve"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(curve, norms);
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(report["min_of_mean"].as_f64().unwrap(), min);
    assert_eq!(report["mean_of_min"].as_f64().unwrap(), min);
    assert_eq!(report["constants"]["sigma2"].as_f64().unwrap(), 0.0);
}

#[test]
fn shipped_reference_config_satisfies_the_theorem_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let o = muonkit(&[
        "run",
        repo_config("reference.toml").to_str().unwrap(),
        "--output-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let report = read_report(tmp.path());
    assert_eq!(
        report["checks"]["empirical_le_theorem_bound"],
        Value::Bool(true)
    );
    assert_eq!(report["replicas"].as_array().unwrap().len(), 32);
    assert_eq!(report["corollary"][0]["case"], "i");
    let realized = report["theorem"]["realized"]["terms"]["total"]
        .as_f64()
        .unwrap();
    let a_priori = report["theorem"]["a_priori"]["terms"]["total"]
        .as_f64()
        .unwrap();
    assert!(realized > 0.0 && a_priori > 0.0);
    for r in 0..32 {
        assert!(tmp.path().join(format!("replica_{r:04}.csv")).exists());
    }
}

#[test]
fn failing_report_check_gives_exit_status_one() {
    // The diminishing-rate closed form is below the exact bound at T = 16.
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let body = config(REFERENCE, "kind = \"diminishing\"\neta = 0.01", 16, 2, &out)
        .replace("b = 1", "b = 16");
    let cfg = write_config(tmp.path(), &body);
    let o = muonkit(&["run", cfg.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let report = read_report(&out);
    assert_eq!(report["corollary"][0]["case"], "vii");
    assert_eq!(report["checks"]["corollary_dominates"], Value::Bool(false));
    assert!(report["general_diminishing_bound"].as_f64().is_some());
}

#[test]
fn config_errors_give_exit_status_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let good = config(NOISELESS, "kind = \"constant\"\neta = 0.05", 10, 1, &out);
    for bad in [
        good.replace("beta = 0.9", "beta = 0.9\nmomentum = 0.5"),
        good.replace("replicas = 1", "replicas = 0"),
        good.replace("eta = 0.05", "eta = -0.05"),
        good.replace("[run]", "[runs]"),
    ] {
        let cfg = write_config(tmp.path(), &bad);
        let o = muonkit(&["run", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));
    }
    let missing = tmp.path().join("missing.toml");
    assert_eq!(
        muonkit(&["bounds", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert!(!out.exists());
}

#[test]
fn worker_override_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_muonkit"))
        .args(["run", repo_config("reference.toml").to_str().unwrap()])
        .env("MUON_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bounds_reports_without_simulating() {
    let o = muonkit(&[
        "bounds",
        repo_config("least_squares_diminishing.toml")
            .to_str()
            .unwrap(),
    ]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["corollary"][0]["case"], "viii");
    assert!(v["theorem_a_priori"]["terms"]["term6"].as_f64().unwrap() > 0.0);
    assert!(v["general_diminishing_bound"].as_f64().unwrap() > 0.0);
    assert!(v.get("replicas").is_none());
}

#[test]
fn sweep_writes_a_table_and_prints_the_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let o = muonkit(&[
        "sweep",
        repo_config("rate_sweep.toml").to_str().unwrap(),
        "--coupling",
        "R2",
        "--tmin",
        "16",
        "--tmax",
        "4096",
        "--output-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("R2 (case i): slope -1.0000"), "{stdout}");
    let csv = std::fs::read_to_string(tmp.path().join("sweep_R2.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,eta,b,bound,bound_recomputed,normalized"
    );
    let ts: Vec<usize> = lines
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ts, vec![16, 32, 64, 128, 256, 512, 1024, 2048, 4096]);

    let bad = muonkit(&[
        "sweep",
        repo_config("rate_sweep.toml").to_str().unwrap(),
        "--coupling",
        "R2",
        "--tmin",
        "64",
        "--tmax",
        "32",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verify_reports_every_check_once() {
    let o = muonkit(&["verify", "--fast", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, CHECK_NAMES.to_vec());
    assert!(v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["status"] != "fail"));

    let text = muonkit(&["verify"]);
    let stdout = String::from_utf8_lossy(&text.stdout);
    assert_eq!(
        stdout
            .lines()
            .filter(|l| l.starts_with("PASS") || l.starts_with("NOTE"))
            .count(),
        29
    );
    assert!(stdout.ends_with("29 checks, 0 failed\n"));
}
