use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chaoslab::artifacts::sha256_hex;
use chaoslab::formats::parse_csv;
use serde_json::Value;
use tempfile::TempDir;

fn chaoslab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaoslab")).current_dir(dir).args(args).output().expect("binary runs")
}

fn write_spectrum(dir: &Path) {
    fs::write(dir.join("s.json"), r#"{"eigenvalues": [1.0, -0.6, 0.4, 0.25], "tail_count": 2, "tail_bound": 0.01}"#)
        .unwrap();
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write_spectrum(d);
    let runs: [&[&str]; 3] = [
        &["chaos2-density", "--spectrum", "s.json", "--n", "40000"],
        &["stein-check", "--spectrum", "s.json", "--h", "hermite:0.2:2", "--n", "40000"],
        &["ou-lse", "--T", "20", "--seeds", "12"],
    ];
    for args in runs {
        let mut tables = Vec::new();
        for threads in ["1", "3"] {
            let out = format!("t{threads}");
            let mut full = vec!["--seed", "5", "--threads", threads, "--out", &out];
            full.extend_from_slice(args);
            let o = chaoslab(d, &full);
            assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
            let csv = fs::read_dir(d.join(&out))
                .unwrap()
                .map(|e| e.unwrap().path())
                .find(|p| p.extension().is_some_and(|x| x == "csv"))
                .unwrap();
            tables.push(fs::read(csv).unwrap());
        }
        assert_eq!(tables[0], tables[1], "{args:?}");
    }
}

#[test]
fn malformed_spectrum_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cases = [
        (r#"[1.0, "x"]"#, "eigenvalues[1]"),
        (r#"{"eigenvalues": [1.0], "tail_count": 2}"#, "tail_bound"),
        (r#"{"values": [1.0]}"#, "values"),
        ("[1.0,", "not valid JSON"),
    ];
    for (text, field) in cases {
        fs::write(d.join("bad.json"), text).unwrap();
        let o = chaoslab(d, &["--out", "o", "chaos2-density", "--spectrum", "bad.json", "--n", "1000"]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(field), "{text}: {err}");
    }
    let o = chaoslab(d, &["--out", "o", "chaos2-density", "--spectrum", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = chaoslab(d, &["chaos2-density", "--n", "ten"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn density_artifacts_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write_spectrum(d);
    let o = chaoslab(d, &["--out", "csv", "chaos2-density", "--spectrum", "s.json", "--n", "20000", "--svg", "f.svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = parse_csv(&fs::read_to_string(d.join("csv/density.csv")).unwrap()).unwrap();
    assert_eq!(table.header, ["x", "estimate", "se", "target"]);
    assert_eq!(table.rows.len(), 241);
    assert!(fs::read_to_string(d.join("csv/f.svg")).unwrap().starts_with("<svg"));

    let manifest = read_json(&d.join("csv/manifest.json"));
    assert_eq!(manifest["command"], "chaos2-density");
    let listed = manifest["artifacts"].as_array().unwrap();
    assert!(listed.len() >= 4);
    for a in listed {
        let bytes = fs::read(d.join("csv").join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(a["sha256"].as_str().unwrap(), sha256_hex(&bytes));
        assert_eq!(a["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }

    let o =
        chaoslab(d, &["--out", "json", "--format", "json", "chaos2-density", "--spectrum", "s.json", "--n", "20000"]);
    assert!(o.status.success());
    let v = read_json(&d.join("json/density.json"));
    assert_eq!(v["x"].as_array().unwrap().len(), 241);
    // same seed, same numbers in either format
    let first = v["estimate"][120].as_f64().unwrap();
    assert_eq!(first, table.rows[120][1]);
}

#[test]
fn saved_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write_spectrum(d);
    let o = chaoslab(
        d,
        &["--seed", "9", "--out", "a", "negmoment", "--spectrum", "s.json", "--alpha", "1", "--mc-n", "5000"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = chaoslab(d, &["--config", "a/config.json", "--out", "b", "negmoment"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(d.join("a/negmoment.json")).unwrap(), fs::read(d.join("b/negmoment.json")).unwrap());

    fs::write(d.join("bad.json"), r#"{"command": "negmoment", "params": {"alpah": 1}}"#).unwrap();
    let o = chaoslab(d, &["--config", "bad.json", "negmoment"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpah"));
}

#[test]
fn failing_checks_exit_one() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("s.json"), "[1.0, 0.5]").unwrap();
    // two eigenvalues: E[Q^{-1}] is infinite
    let o = chaoslab(d, &["--out", "o", "negmoment", "--spectrum", "s.json", "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverges"));
    // too few eigenvalues for the certificate moments
    let o = chaoslab(d, &["--out", "o", "certificate", "--spectrum", "s.json", "--cq", "1"]);
    assert_eq!(o.status.code(), Some(1));
}
