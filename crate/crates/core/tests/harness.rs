use std::fs;

use reducechop::ansatz::ActivationMode;
use reducechop::harness::{run_experiment, verify_bounds, ExperimentConfig, Lemma, StateFamily, VerifyConfig};

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::protocol(4, 0.08);
    cfg.tfim_layers = 4;
    cfg.instances = 4;
    cfg.seed = 17;
    cfg
}

#[test]
fn outputs_are_byte_identical_across_runs_and_pools() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    run_experiment(&cfg, Some(&dir.path().join("a")), 1).unwrap();
    run_experiment(&cfg, Some(&dir.path().join("b")), 0).unwrap();
    for f in ["trajectory.csv", "histogram.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn every_instance_ends_with_a_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&small_config(), Some(dir.path()), 0).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["instances"].as_array().unwrap().len(), 4);
    assert_eq!(summary["config_hash"].as_str().unwrap(), out.summary.config_hash);
    for rec in &out.records {
        assert!(rec.completed || rec.failed);
        assert!(!rec.success || rec.completed);
        assert!(rec.p_audit);
        let ts: Vec<f64> = rec.trajectory.iter().map(|r| r.t).collect();
        assert!(ts.windows(2).all(|w| w[0] <= w[1]));
    }
    let histogram_total: usize = out.summary.histogram.values().sum();
    assert_eq!(histogram_total, 4);
}

#[test]
fn parametric_schedule_runs_end_to_end() {
    let mut cfg = small_config();
    cfg.schedule = ActivationMode::Parametric;
    cfg.instances = 2;
    let out = run_experiment(&cfg, None, 0).unwrap();
    assert!(out.records.iter().all(|r| r.completed || r.failed));
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    assert!(run_experiment(&small_config(), Some(&blocker.join("sub")), 0).is_err());
}

#[test]
fn ghz_rank_bound_holds() {
    let mut cfg = VerifyConfig::standard(Lemma::Lemma2, 1000);
    cfg.state = StateFamily::Ghz;
    cfg.shots = 4000;
    let r = verify_bounds(&cfg, 0).unwrap();
    assert_eq!(r.violations, 0);
    assert!(r.analytic_bound <= 2.1e-9);
    assert!(r.pass);
}
