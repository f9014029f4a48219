use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn cmc(args: &[&str], config: &Path, out: &Path) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_cmc"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("CMC_LOG", "quiet")
        .status()
        .expect("cmc runs");
    status.code().expect("exit code")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn single_nodoid_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "scenario = \"one\"\n[nodoid]\nH = 1.0\nt = [1.0]\n");
    assert_eq!(cmc(&["nodoid-table"], &cfg, tmp.path()), 0);
    let text = fs::read_to_string(tmp.path().join("nodoid-table/nodoid.csv")).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 1.0);
    assert_eq!(row[1], 2.0);
    assert_eq!(format!("{:.6}", row[2]), "1.414214");
    let m = manifest(&tmp.path().join("nodoid-table"));
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["status"], "ok");
}

#[test]
fn empty_range_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "scenario = \"bad\"\n[nodoid]\nH = 1.0\nt_min = 2.0\nt_max = 1.0\ncount = 5\n",
    );
    assert_eq!(cmc(&["nodoid-table"], &cfg, tmp.path()), 2);
    let m = manifest(&tmp.path().join("nodoid-table"));
    assert_eq!(m["status"], "config_error");
    assert!(m["reason"]["message"].as_str().unwrap().contains("empty range"));
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "scenario = \"typo\"\n[nodoid]\nH = 1.0\nt = [1.0]\ncount_ = 3\n");
    assert_eq!(cmc(&["nodoid-table"], &cfg, tmp.path()), 2);
    let cfg = write_config(tmp.path(), "scenario = \"typo\"\nsolver_tol = 1.0\n");
    assert_eq!(cmc(&["nodoid-table"], &cfg, tmp.path()), 2);
}

#[test]
fn failed_under_condition_exits_three_with_witness() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(cmc(&["circle-check"], &scenarios().join("cap.toml"), tmp.path()), 3);
    let m = manifest(&tmp.path().join("circle-check"));
    assert_eq!(m["status"], "hypothesis_failure");
    assert!(m["reason"]["witness"].as_f64().unwrap().abs() < 0.05);
    let violations = fs::read_to_string(tmp.path().join("circle-check/violations.csv")).unwrap();
    assert!(violations.lines().nth(1).unwrap().starts_with("0.6,"));
}

#[test]
fn convex_parabola_passes_circle_checks() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(cmc(&["circle-check"], &scenarios().join("parabola.toml"), tmp.path()), 0);
    let checks = fs::read_to_string(tmp.path().join("circle-check/checks.csv")).unwrap();
    assert!(checks.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn solver_failure_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenarios().join("wang.toml")).unwrap()
        + "\n[solver]\nmax_newton = 1\nmax_refinements = 0\n";
    let cfg = write_config(tmp.path(), &text);
    assert_eq!(cmc(&["solve"], &cfg, tmp.path()), 1);
    assert_eq!(manifest(&tmp.path().join("solve"))["status"], "solver_failure");
}

#[test]
fn non_convex_data_fails_the_collin_hypothesis() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenarios().join("wang.toml"))
        .unwrap()
        .replace("coefficients = [0.0, 0.0, 1.0]", "coefficients = [0.0, 0.0, -1.0]");
    let cfg = write_config(tmp.path(), &text);
    assert_eq!(cmc(&["solve"], &cfg, tmp.path()), 3);
}

#[test]
fn manifest_lists_every_output_with_its_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("rolle.toml");
    assert_eq!(cmc(&["circle-check"], &cfg, tmp.path()), 0);
    let dir = tmp.path().join("circle-check");
    let m = manifest(&dir);
    let outputs = m["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|o| o["path"] == "rolle.csv"));
    for o in outputs {
        let bytes = fs::read(dir.join(o["path"].as_str().unwrap())).unwrap();
        let digest = sha256_hex(&bytes);
        assert_eq!(o["sha256"].as_str().unwrap(), digest);
    }
    let rolle = fs::read_to_string(dir.join("rolle.csv")).unwrap();
    assert_eq!(rolle.lines().nth(1).unwrap(), "-0.5,0.5,0,0,1");
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("wang.toml");
    for dir in [a.path(), b.path()] {
        assert_eq!(cmc(&["sweep"], &cfg, dir), 0);
    }
    for name in ["gap.csv", "gap_verdict.csv", "checks.csv", "gap.svg", "manifest.json"] {
        let x = fs::read(a.path().join("sweep").join(name)).unwrap();
        let y = fs::read(b.path().join("sweep").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
