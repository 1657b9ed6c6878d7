//! End-to-end runs of the `exprk` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn exprk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exprk"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn bundled(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tableaus")
        .join(format!("{name}.toml"))
        .display()
        .to_string()
}

#[test]
fn check_tableau_bundled_erk43_passes() {
    let o = exprk(&["check-tableau", "--file", &bundled("erk43"), "--tau", "0.1", "--dim", "8", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("strong form: pass"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn check_tableau_rejects_etd3rk() {
    let o = exprk(&["check-tableau", "--file", &bundled("etd3rk")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn probe_prints_bounded_column() {
    let o = exprk(&["probe", "--gamma", "0.5", "--n-list", "25,50,100,200"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().take(4).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[1] < 2.3));
}

#[test]
fn unknown_flag_prints_usage() {
    let o = exprk(&["probe", "--gamma", "0.5", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn converge_writes_csv_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = exprk(&[
            "converge", "--method", "erk43", "--n", "199", "--nu", "0.2", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("fitted order"));
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 9);
}

#[test]
fn invalid_configuration_exits_one() {
    let o = exprk(&["converge", "--method", "erk43", "--n", "19", "--k-min", "5", "--k-max", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let o = exprk(&["converge", "--method", "erk43", "--n", "2"]);
    assert_eq!(o.status.code(), Some(1));
}
