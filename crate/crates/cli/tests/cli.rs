use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use silab::consistency::{check, ModelId};
use silab::report::{CompareReport, RunReport, Status};
use silab::suite::SuiteReport;
use silab::ExecutionGraph;

fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(rel)
}

fn silab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_silab")).args(args).env("SILAB_WORKERS", "2").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_lu_under_si() {
    let o = silab(&["run", path(&corpus("fig1/lu.litmus")), "--model", "si"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("si forbidden a=0, b=0: PASS"), "{}", stdout(&o));
}

#[test]
fn run_sbt_under_rsi_json() {
    let o = silab(&["run", path(&corpus("fig1/sbt.litmus")), "--model", "rsi", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: RunReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r.program, "SBT");
    assert_eq!(r.expectations.len(), 1);
    assert_eq!(r.expectations[0].status, Status::Met);
    let weak = &r.expectations[0].outcome;
    assert!(r.results[0].contains_matching(weak));
}

#[test]
fn run_reports_violated_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.litmus");
    let text = std::fs::read_to_string(corpus("fig1/lu.litmus")).unwrap().replace("forbidden", "allowed");
    std::fs::write(&file, text).unwrap();
    let o = silab(&["run", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn empty_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("empty.litmus");
    std::fs::write(&file, "").unwrap();
    assert_eq!(silab(&["run", file.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(silab(&["run", "/no/such/file.litmus"]).status.code(), Some(2));
    assert_eq!(silab(&["run"]).status.code(), Some(2));
    assert_eq!(silab(&["corpus", "--suite", "fig7"]).status.code(), Some(2));
}

#[test]
fn compare_ws_models_and_implementations() {
    let ws = corpus("fig1/ws.litmus");
    let o = silab(&["compare", path(&ws), "--left", "si", "--right", "eager-si"]);
    assert_eq!(o.status.code(), Some(0));
    let o = silab(&["compare", path(&ws), "--left", "si", "--right", "cand-b", "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let r: CompareReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r.right_only.is_empty());
    assert_eq!(r.left_only.len(), 1);
    assert_eq!(r.left_only[0].values().copied().collect::<Vec<_>>(), vec![0, 0]);
}

#[test]
fn compare_rejects_si_on_transaction_free_program() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("mp.litmus");
    std::fs::write(&file, "litmus plain\nlocations x\nthread t1\n  x = 1\nthread t2\n  a = x\n").unwrap();
    let o = silab(&["compare", file.to_str().unwrap(), "--left", "si", "--right", "rsi"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr).into_owned();
    assert!(err.contains("non-transactional"), "{err}");
}

#[test]
fn corpus_fig1_table() {
    let o = silab(&["corpus", "--suite", "fig1", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: SuiteReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((r.passed, r.failed), (6, 0));
    let names: Vec<&str> = r.rows.iter().map(|r| r.test.as_str()).collect();
    assert_eq!(names, ["LU", "WS", "WS2", "LU2", "SBT", "MPT"]);
}

#[test]
fn corpus_locks_table() {
    let o = silab(&["corpus", "--suite", "locks"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("PASS") && l.contains("write-sync leaves some reader pair unordered")), "{out}");
    assert!(!out.contains("FAIL"));
}

#[test]
fn check_torn_plain_read_is_rsi_inconsistent() {
    let o = silab(&["check", path(&corpus("graphs/plain_sees_partial_tx.json")), "--model", "rsi"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("RSI: inconsistent"), "{out}");
    assert!(out.contains("(rsi-hb|loc ∪ mo ∪ fr cycle"), "{out}");
}

#[test]
fn check_init_only_is_consistent_everywhere() {
    let o = silab(&["check", path(&corpus("graphs/init_only.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), ModelId::ALL.len());
    assert!(out.lines().all(|l| l.ends_with(": consistent")), "{out}");
}

#[test]
fn check_rejects_malformed_graph() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("g.json");
    std::fs::write(&file, r#"{"events": [{"id": 0}]}"#).unwrap();
    assert_eq!(silab(&["check", file.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&file, "not json").unwrap();
    assert_eq!(silab(&["check", file.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn reversed_mo_flips_the_ws_verdict() {
    let text = std::fs::read_to_string(corpus("graphs/ws.json")).unwrap();
    let original = ExecutionGraph::from_json(&text).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mo = doc["mo"].as_array_mut().unwrap();
    for pair in mo.iter_mut() {
        let p = pair.as_array_mut().unwrap();
        p.swap(0, 1);
    }
    let mutated_text = serde_json::to_string(&doc).unwrap();
    let mutated = ExecutionGraph::from_json(&mutated_text).unwrap();

    let before = check(ModelId::SiAxiomatic, &original).unwrap();
    let after = check(ModelId::SiAxiomatic, &mutated).unwrap();
    assert_ne!(before.consistent, after.consistent);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("ws_rev.json");
    std::fs::write(&file, mutated_text).unwrap();
    let o = silab(&["check", file.to_str().unwrap(), "--model", "si", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(lines[0]["verdict"]["consistent"], serde_json::Value::Bool(after.consistent));
    assert_eq!(stdout(&silab(&["check", file.to_str().unwrap(), "--model", "si"])).trim(), format!("SI: {after}"));
}
