use std::fs;
use std::process::{Command, Output};

fn mpsub(args: &[&str], out_dir: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpsub"))
        .args(args)
        .env("MPSUB_OUT_DIR", out_dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn lists_presets() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpsub(&["presets", "list"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    for p in ["fig2a-", "fig2b-", "fig3a-", "fig3b-", "ed1-", "ed2-"] {
        assert!(text.contains(p), "{p} missing");
    }
}

#[test]
fn vacuum_wigner_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpsub(&["wigner", "vacuum", "--mode", "0", "--out", "vac.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["integral"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    // w0 is 2π W(0, 0)
    assert!((v["w0"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let text = fs::read_to_string(dir.path().join("vac.csv")).unwrap();
    assert!(text.starts_with("x,p,W\n"));
    let origin = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .find(|r| r[0].abs() < 1e-9 && r[1].abs() < 1e-9)
        .expect("grid contains the origin");
    assert!((origin[2] - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"schema_version\": 1,\n  \"name\": \"x\",\n  \"state\": {\"kind\": \"paper-ed3\"},\n  \"analyses\": [\"w0\"],\n  \"bogus\": 1\n}\n").unwrap();
    let o = mpsub(&["simulate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("[config") && err.contains("bogus") && err.contains("line 6"), "{err}");

    let o = mpsub(&["simulate", "no-such-preset"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_of_range_mode_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpsub(&["wigner", "vacuum", "--mode", "3", "--out", "v.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn simulate_then_reconstruct() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
  "schema_version": 1,
  "name": "small",
  "state": {"kind": "pure-squeezed", "db": [1.8]},
  "subtraction": {"coefficients": [[1, 0]]},
  "measurements": [{"mode": 0, "samples": 4000}],
  "analyses": ["w0", "kurtosis", "fidelity"],
  "seed": 5
}"#;
    let path = dir.path().join("small.json");
    fs::write(&path, config).unwrap();
    let o = mpsub(&["simulate", path.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((report["measurements"][0]["w0"].as_f64().unwrap() + 1.0).abs() < 1e-6);
    let again = mpsub(&["simulate", path.to_str().unwrap()], dir.path());
    assert_eq!(stdout(&again), stdout(&o));
    let written = fs::read_to_string(dir.path().join("small/report.json")).unwrap();
    assert_eq!(written, stdout(&o));

    let data = dir.path().join("small/data-0-HG0.csv");
    let o = mpsub(&["tomography", data.to_str().unwrap(), "--cutoff", "8"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let t: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(t["w0"].as_f64().unwrap() < -0.8);
    assert_eq!(t["samples"], 4000);
}

#[test]
fn criteria_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpsub(&["criteria", "fig2b-epr", "--format", "csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("key,value\n"));
    assert!(text.contains("criteria.duan.value,2.70"));
}
