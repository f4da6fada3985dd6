use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cuspext(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuspext"))
        .args(args)
        .env("CUSPEXT_OUT", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn record(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{name}.json"))).expect("record written");
    serde_json::from_str(&text).expect("record is JSON")
}

#[test]
fn exponents_prints_rational_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = cuspext(dir.path(), &["exponents", "--p", "3", "--q", "3", "--direction", "in"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("P=3, Q=3/2\n"));
    let r = record(dir.path(), "exponents");
    assert_eq!(r["results"]["Q"], "3/2");
}

#[test]
fn extend_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = cuspext(dir.path(), &["extend", "--s", "2", "--q", "4", "--gamma", "0.2", "--levels", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = record(dir.path(), "extend");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["exponents"]["q"], "4");
    assert_eq!(r["results"]["big_p"], "2");
    assert_eq!(r["results"]["big_q"], "8/5");
    let csv = std::fs::read_to_string(dir.path().join("extend.csv")).unwrap();
    assert!(csv.starts_with("level,source_seminorm,extension_seminorm,ratio\n"));
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn extend_rejects_non_member_with_rule() {
    let dir = tempfile::tempdir().unwrap();
    let o = cuspext(dir.path(), &["extend", "--s", "2", "--q", "4", "--gamma", "-0.9", "--levels", "6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("γ > 1 − 2/P"), "{}", stderr(&o));
    assert!(!dir.path().join("extend.json").exists());
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cuspext(dir.path(), &["exponents", "--frobnicate"]).status.code(), Some(64));
    assert_eq!(cuspext(dir.path(), &["bogus"]).status.code(), Some(64));
    assert_eq!(cuspext(dir.path(), &["exponents", "--p", "seven"]).status.code(), Some(64));
    assert_eq!(cuspext(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn distortion_scan_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = cuspext(dir.path(), &["distortion-scan", "--s", "2", "--p", "3/2,4", "--n", "16", "--levels", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("distortion-scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "s,p,I_0,I_1,I_2,I_3,I_4,I_5,verdict,oracle_threshold");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!((first[0], first[1], first[9]), ("2", "3/2", "5"));
    let second: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(second[9], "5/3");
}

#[test]
fn sharpness_emits_table_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = cuspext(dir.path(), &["sharpness", "--p", "2", "--q", "2", "--s", "3/2,4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("sharpness.csv").exists());
    let svg = std::fs::read_to_string(dir.path().join("sharpness-p2.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let quiet = tempfile::tempdir().unwrap();
    let o = cuspext(quiet.path(), &["sharpness", "--p", "2", "--q", "2", "--s", "3/2,4", "--no-svg"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!quiet.path().join("sharpness-p2.svg").exists());
    let a = std::fs::read_to_string(dir.path().join("sharpness.csv")).unwrap();
    let b = std::fs::read_to_string(quiet.path().join("sharpness.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_drives_classify_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        r#"
subcommand = "classify"
map = { kind = "angular-stretch", s = 2.0 }
domain = { kind = "polar-cusp-complement", s = 2.0 }
quadrature = { n = 16, level = 12 }

[exponents]
p = "4"
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = cuspext(&out, &["classify", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = record(&out, "classify");
    assert_eq!(r["config"]["map"]["kind"], "angular-stretch");
    assert_eq!(r["results"]["series"]["verdict"], "divergent");

    let o = cuspext(&out, &["report"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("classify"));
    assert!(stdout(&o).contains("divergent"));

    let o = cuspext(&out, &["extend", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn reruns_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["l1-demo", "--n", "16", "--levels", "6"];
    assert_eq!(cuspext(a.path(), &args).status.code(), Some(0));
    assert_eq!(cuspext(b.path(), &args).status.code(), Some(0));
    let (mut ra, mut rb) = (record(a.path(), "l1-demo"), record(b.path(), "l1-demo"));
    for r in [&mut ra, &mut rb] {
        r["wall_clock_seconds"] = Value::Null;
        r["files"] = Value::Null;
        r["config"]["out"] = Value::Null;
    }
    assert_eq!(ra, rb);
}
