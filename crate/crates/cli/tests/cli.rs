use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const GHZ4: &str = r#"{"n":4,"layers":[[{"kind":"H","targets":[0]}],[{"kind":"CNOT","targets":[0,1]}],[{"kind":"CNOT","targets":[1,2]}],[{"kind":"CNOT","targets":[2,3]}]]}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_reducechop"));
    c.env_remove("REDUCECHOP_MAX_QUBITS");
    c
}

fn json_out(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not json ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn chop_ghz_identity_reducer_within_bound() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(dir.path(), "ghz.json", GHZ4);
    let out = bin()
        .args(["chop", "--circuit", &circuit, "--cut", "2", "--x", "0000", "--eps", "0.05"])
        .args(["--seed", "11"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = json_out(&out);
    let p = v["probabilities"]["0000"].as_f64().unwrap();
    let allowed = v["l1_allowed"].as_f64().unwrap();
    assert!((p - 0.5).abs() <= allowed, "{p} vs {allowed}");
    assert_eq!(v["seed"], 11);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    assert!(v["artifact_version"].is_string());
}

#[test]
fn chop_exact_matches_direct() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(dir.path(), "ghz.json", GHZ4);
    let out = bin()
        .args(["chop", "--circuit", &circuit, "--cut", "2", "--exact"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = json_out(&out);
    assert!(v["l1_error"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["probabilities"].as_object().unwrap().len(), 16);
}

#[test]
fn malformed_json_reports_position_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", "{\"n\": 4,\n \"eps\": 0.08,\n \"epsilon\": 1}");
    let out = bin()
        .args(["run-experiment", "--config", &cfg, "--out"])
        .arg(dir.path().join("o"))
        .arg("--error-json")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v = json_out(&out);
    assert_eq!(v["error"]["kind"], "json");
    let msg = v["error"]["message"].as_str().unwrap();
    assert!(msg.contains("epsilon") && msg.contains("line 3"), "{msg}");
}

#[test]
fn budget_gate_prints_minimum_shots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"n": 4, "eps": 0.05, "shots": 100}"#);
    let out = bin()
        .args(["run-experiment", "--config", &cfg, "--out"])
        .arg(dir.path().join("o"))
        .arg("--error-json")
        .output()
        .unwrap();
    assert!(!out.status.success());
    let v = json_out(&out);
    assert_eq!(v["error"]["kind"], "insufficient_budget");
    assert!(v["error"]["message"].as_str().unwrap().contains("1843"));
}

#[test]
fn run_experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"n": 4, "eps": 0.08, "tfim_layers": 4, "instances": 3, "seed": 5}"#,
    );
    let run = |sub: &str, workers: &str| {
        let out = bin()
            .args(["run-experiment", "--config", &cfg, "--workers", workers, "--out"])
            .arg(dir.path().join(sub))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        json_out(&out)
    };
    let a = run("a", "1");
    let b = run("b", "3");
    assert_eq!(a["config_hash"], b["config_hash"]);
    for f in ["trajectory.csv", "histogram.csv"] {
        let x = fs::read(dir.path().join("a").join(f)).unwrap();
        let y = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let summary: Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["instances"].as_array().unwrap().len(), 3);
}

#[test]
fn qubit_cap_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"n": 4, "eps": 0.08}"#);
    let out = bin()
        .env("REDUCECHOP_MAX_QUBITS", "3")
        .args(["run-experiment", "--config", &cfg, "--error-json", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert_eq!(json_out(&out)["error"]["kind"], "config");
}

#[test]
fn estimate_cb_on_amplitude_file() {
    let dir = tempfile::tempdir().unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let state = write(
        dir.path(),
        "psi.json",
        &format!(r#"{{"amplitudes": [[{h}, 0], [0, 0], [0, 0], [0, {h}]]}}"#),
    );
    let out = bin()
        .args(["estimate-cb", "--state", &state, "--M", "4000", "--eps", "0.05", "--seed", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = json_out(&out);
    assert_eq!(v["K"], 2);
    assert_eq!(v["F"], true);
    assert_eq!(v["M"], 4000);
}

#[test]
fn verify_bounds_on_basis_state() {
    let out = bin()
        .args(["verify-bounds", "--which", "lemma2", "--trials", "100", "--state", "basis"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = json_out(&out);
    assert_eq!(v["violations"], 0);
    assert_eq!(v["pass"], true);
}

#[test]
fn too_few_trials_rejected() {
    let out = bin()
        .args(["verify-bounds", "--which", "lemma3", "--trials", "10", "--error-json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_out(&out)["error"]["kind"], "precondition");
}
