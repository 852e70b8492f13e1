use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

use qsim_cli::graph::validate_text;

fn qsim(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qsim"));
    cmd.args(args).env_remove("QSIM_CUTOFF");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn fixture() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/hom.json").display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_agrees_with_the_library() {
    let ok = qsim(&["validate", &fixture()], &[]);
    assert!(ok.status.success());
    let report: Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(report["valid"], true);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = std::fs::read_to_string(fixture()).unwrap().replace("detector_2.in", "bs.in1");
    std::fs::write(&path, &text).unwrap();
    let bad = qsim(&["validate", path.to_str().unwrap()], &[]);
    assert!(!bad.status.success());
    let report: Value = serde_json::from_str(&stdout(&bad)).unwrap();
    assert_eq!(report["errors"], serde_json::to_value(validate_text(&text)).unwrap());
    assert_eq!(report["errors"][0]["pointer"], "/connections/3");
}

#[test]
fn run_exports_with_env_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = qsim(&["run", &fixture(), "--out", out.to_str().unwrap()], &[("QSIM_CUTOFF", "3")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: Value = serde_json::from_slice(&std::fs::read(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["metadata"]["cutoff"], 3);
    for f in ["coincidence.csv", "detections.csv", "trace.jsonl"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn bad_env_cutoff_fails() {
    let o = qsim(&["run", &fixture()], &[("QSIM_CUTOFF", "one")]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("QSIM_CUTOFF"));
}

#[test]
fn hom_sweep_prints_csv() {
    let o = qsim(&["hom-sweep", "--delays", "-2e-12:2e-12:5"], &[]);
    assert!(o.status.success());
    let text = stdout(&o);
    let section: Vec<&str> = text.split("# ").find(|s| s.starts_with("hom_sweep")).unwrap().lines().collect();
    assert_eq!(section[1], "delay,lambda,p_coincidence");
    assert_eq!(section.len(), 2 + 5);
}

#[test]
fn jdr_third_measurement_convention() {
    let o = qsim(&["jdr", "--message", "0b011", "--order", "from_001", "--no-snapshots"], &[]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("receiver,3,011,"), "{text}");
    let o = qsim(&["jdr", "--message", "9"], &[]);
    assert!(!o.status.success());
}

#[test]
fn sampled_jdr_is_seeded() {
    let args = ["jdr", "--message", "6", "--sample", "7", "--no-snapshots"];
    assert_eq!(stdout(&qsim(&args, &[])), stdout(&qsim(&args, &[])));
}
