use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_f1parse");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).arg("-q").output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn negative_c_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let trees = dir.path().join("g1.mrg");
    assert!(run(&["synth", "--kind", "g1", "--count", "4", "--out", s(&trees)]).status.success());
    let out = run(&["train", "--trees", s(&trees), "--model-out", s(&dir.path().join("m")), "--C", "-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("m").exists());
}

#[test]
fn bad_flags_and_missing_files() {
    assert_eq!(run(&["train"]).status.code(), Some(1));
    assert_eq!(run(&["oracle-check", "--max-len", "12"]).status.code(), Some(1));
    let out = run(&["eval", "--pred", "/nonexistent/a", "--gold", "/nonexistent/b"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn truncated_treebank_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mrg");
    fs::write(&bad, "(S (NP").unwrap();
    let out = run(&["preprocess", "--in", s(&bad), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset 7"));
}

#[test]
fn preprocess_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.mrg");
    fs::write(
        &raw,
        "( (S (NP-SBJ (-NONE- *T*)) (NP-SBJ-1 (DT the) (NN dog)) (VP (VBD barked)) (. .)))\n\
         ( (S (S (VP (VB go))) (NP (-NONE- *))))\n",
    )
    .unwrap();
    let once = dir.path().join("once.mrg");
    let twice = dir.path().join("twice.mrg");
    assert!(run(&["preprocess", "--in", s(&raw), "--out", s(&once)]).status.success());
    assert!(run(&["preprocess", "--in", s(&once), "--out", s(&twice)]).status.success());
    let a = fs::read_to_string(&once).unwrap();
    assert_eq!(a, fs::read_to_string(&twice).unwrap());
    assert!(!a.contains("NONE") && !a.contains("SBJ"));
}

#[test]
fn compare_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let trees = dir.path().join("t.mrg");
    assert!(run(&["synth", "--kind", "nary", "--count", "30", "--out", s(&trees)]).status.success());
    let tsv = dir.path().join("d.tsv");
    let out = run(&["compare", "--pred-a", s(&trees), "--pred-b", s(&trees), "--gold", s(&trees), "--tsv", s(&tsv)]);
    let v = stdout_json(&out);
    assert_eq!(v["n_nonzero"], 0);
    assert_eq!(v["p_value"], 1.0);
    let text = fs::read_to_string(&tsv).unwrap();
    assert!(text.starts_with("index\tdelta_f1_a\tdelta_f1_b\tdifference\tzero\n"));
    assert_eq!(text.lines().count(), 31);
}

#[test]
fn g1_train_parse_eval() {
    let dir = tempfile::tempdir().unwrap();
    let trees = dir.path().join("g1.mrg");
    let model = dir.path().join("model.tsv");
    let grammar = dir.path().join("grammar.txt");
    assert!(run(&["synth", "--kind", "g1", "--count", "10", "--out", s(&trees)]).status.success());
    let out = run(&[
        "train",
        "--trees",
        s(&trees),
        "--model-out",
        s(&model),
        "--grammar-out",
        s(&grammar),
        "--C",
        "100",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["violations_remaining"], 0);
    assert_eq!(report["loss"], "f1");
    assert!(grammar.exists());
    let pred = dir.path().join("pred.mrg");
    assert!(run(&["parse", "--model", s(&model), "--in", s(&trees), "--out", s(&pred)]).status.success());
    let eval = stdout_json(&run(&["eval", "--pred", s(&pred), "--gold", s(&trees)]));
    assert_eq!(eval["f1"], 1.0);
    assert_eq!(eval["n_sentences"], 10);
}

#[test]
fn unknown_sentence_gets_placeholder() {
    let dir = tempfile::tempdir().unwrap();
    let trees = dir.path().join("g1.mrg");
    let model = dir.path().join("model.tsv");
    assert!(run(&["synth", "--kind", "g1", "--count", "4", "--out", s(&trees)]).status.success());
    assert!(run(&["train", "--trees", s(&trees), "--model-out", s(&model)]).status.success());
    let tokens = dir.path().join("tokens.txt");
    fs::write(&tokens, "a a\nzzz\n").unwrap();
    let out = run(&["parse", "--model", s(&model), "--in", s(&tokens), "--tokens"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].contains("NOPARSE"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"oracle": {"trials": 3}}"#).unwrap();
    let out = run(&["--config", s(&cfg), "oracle-check"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1 + 3 * 4);
    let out = run(&["--config", s(&cfg), "oracle-check", "--trials", "2"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1 + 2 * 4);
    fs::write(&cfg, r#"{"orcale": {}}"#).unwrap();
    assert_eq!(run(&["--config", s(&cfg), "oracle-check"]).status.code(), Some(1));
}
