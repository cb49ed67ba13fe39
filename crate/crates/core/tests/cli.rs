use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qhmetric::linalg::{json::to_json_string, ComplexMatrix};
use qhmetric::random::{commuting_pair, stream_rng};
use serde_json::Value;

fn write(dir: &Path, name: &str, m: &ComplexMatrix) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, to_json_string(m)).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhmetric")).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice::<Value>(&out.stdout).unwrap()["report"].clone()
}

#[test]
fn commuting_pair_is_feasible_with_full_nullspace() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = commuting_pair(3, &mut stream_rng(3, 0));
    let (pa, pb) = (write(dir.path(), "a.json", &a), write(dir.path(), "b.json", &b));
    let rep = report(&run(&["shared-metric", "--a", pa.to_str().unwrap(), "--b", pb.to_str().unwrap()]));
    assert_eq!(rep["status"], "Feasible");
    assert_eq!(rep["nullspace_dim"], 3);
}

#[test]
fn complex_spectrum_is_reported_then_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let rotation = ComplexMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0].map(|x| x.into()));
    let path = write(dir.path(), "r.json", &rotation);
    let rep = report(&run(&["spectrum", "--a", path.to_str().unwrap()]));
    assert_eq!(rep["is_real"], false);
    let out = run(&["metric-family", "--a", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: complex spectrum"), "{err}");
}

#[test]
fn missing_file_and_bad_flags_exit_with_code_two() {
    assert_eq!(run(&["spectrum", "--a", "/nonexistent/m.json"]).status.code(), Some(2));
    assert_eq!(run(&["survey", "--n", "3", "--trials", "x"]).status.code(), Some(2));
}

#[test]
fn text_format_flattens_the_report() {
    let out = run(&["--format", "text", "survey", "--n", "2", "--trials", "3", "--seed", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("report.trials = 3")), "{text}");
}
