//! End-to-end runs of the command-line binary.

use std::process::Command;

fn pwqre() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pwqre"))
}

fn data(rel: &str) -> String {
    format!("{}/data/{rel}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn estimate_json_bundle() {
    let out = pwqre()
        .args(["estimate", "--instance", "nh3bf3", "--time", "1au", "--time", "1fs", "--delta", "1e-9"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], "pwqre-report/1");
    assert_eq!(v["instance"]["eta"], serde_json::json!([32, 8, 40]));
    assert_eq!(v["basis"]["system_qubits"], 808);
    assert_eq!(v["rounds"], 1);
    let plans = v["plans"].as_array().unwrap();
    assert_eq!(plans.len(), 2);
    let per_fs = plans[1]["per_fs"].as_f64().unwrap();
    assert!(per_fs > 0.85e11 && per_fs < 3.4e11, "{per_fs}");
}

#[test]
fn output_is_deterministic() {
    let run = || pwqre().args(["estimate", "--instance", "dmtm_molecular", "--format", "csv"]).output().unwrap().stdout;
    assert_eq!(run(), run());
}

#[test]
fn csv_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        pwqre().args(["report", "--instance", "nh3bf3", "--format", "csv", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for suffix in ["basis", "rescaling", "cost", "terms", "plan"] {
        let p = dir.path().join(format!("nh3bf3_{suffix}.csv"));
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.lines().count() >= 2, "{}", p.display());
    }
    let rescaling = std::fs::read_to_string(dir.path().join("nh3bf3_rescaling.csv")).unwrap();
    assert!(rescaling.starts_with("term,exact,bound,ratio\nt_el,"));
}

#[test]
fn instance_file_and_bits_override() {
    let dir = tempfile::tempdir().unwrap();
    let bits = dir.path().join("bits.toml");
    std::fs::write(&bits, "r = 2\n").unwrap();
    let out =
        pwqre().args(["estimate", "--instance", &data("instances/nh3bf3.toml"), "--bits"]).arg(&bits).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rounds"], 2);
}

#[test]
fn modes_and_fingerprint_verbs() {
    let out =
        pwqre().args(["modes", "--input", &data("examples/water_springs.txt"), "--format", "csv"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);
    let out = pwqre()
        .args(["fingerprint", "--xyz", &data("examples/co2_dissociation.xyz"), "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("frame,"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| pwqre().args(args).output().unwrap().status.code();
    assert_eq!(code(&["estimate", "--instance", "no-such-instance"]), Some(2));
    assert_eq!(code(&["estimate", "--instance", "nh3bf3", "--time", "soon"]), Some(2));
    assert_eq!(code(&["estimate", "--instance", "nh3bf3", "--delta", "-1"]), Some(2));
    assert_eq!(code(&["modes", "--input", "/nonexistent/file"]), Some(2));
    assert_eq!(code(&["rescaling", "--instance", "wgs_2x3x3", "--format", "csv"]), Some(0));
}
