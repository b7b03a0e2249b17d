use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trailproof")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// The last JSON line the command printed on stdout or stderr.
fn report(o: &Output) -> Value {
    let text = format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    let line = text.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no JSON in {text}"));
    serde_json::from_str(line).unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let o = tp(dir, args);
    assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    report(&o)
}

#[test]
fn generators_report_clause_counts() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(ok(d.path(), &["gen", "ind", "--n", "5", "--out", "a.cnf"])["clauses"], 6);
    assert_eq!(ok(d.path(), &["gen", "indxor", "--n", "3", "--r", "2", "--out", "b.cnf", "--order-out", "b.ord"])["clauses"], 12);
    let order = fs::read_to_string(d.path().join("b.ord")).unwrap();
    assert!(order.starts_with("p order 6"));
    let stone = ok(d.path(), &["gen", "stone", "--n", "3", "--m", "3", "--seed", "1", "--out", "c.cnf", "--order-out", "c.ord", "--graph-out", "c.g"]);
    assert_eq!(stone["vars"], 12);
    let o = tp(d.path(), &["gen", "ind", "--n", "4"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("p cnf 4 5"));
}

#[test]
fn written_files_read_back() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(p, &["gen", "ind", "--n", "6", "--out", "f.cnf", "--order-out", "f.ord"]);
    ok(p, &["prove", "--cnf", "f.cnf", "--out", "f.res"]);
    ok(p, &["check", "res", "--in", "f.res", "--cnf", "f.cnf"]);
    ok(p, &["transform", "half2ordered", "--in", "f.res", "--cnf", "f.cnf", "--order", "f.ord", "--out", "g.res"]);
    ok(p, &["check", "ordered", "--in", "g.res", "--cnf", "f.cnf", "--order", "f.ord"]);
    let r = ok(p, &["transform", "psim", "--in", "f.res", "--cnf", "f.cnf", "--order", "f.ord", "--out", "f.p0"]);
    assert_eq!(r["pass"], true);
    ok(p, &["check", "p0", "--in", "f.p0", "--cnf", "f.cnf"]);
    ok(p, &["check", "p0", "--in", "f.p0"]);
    ok(p, &["transform", "p02cdcl", "--in", "f.p0", "--cnf", "f.cnf", "--out", "f.run"]);
    ok(p, &["check", "run", "--in", "f.run", "--cnf", "f.cnf", "--order", "f.ord", "--amendments", "π-D,FIRST-L"]);
    ok(p, &["transform", "cdcl2p0", "--in", "f.run", "--cnf", "f.cnf", "--out", "h.p0"]);
    ok(p, &["check", "p0", "--in", "h.p0", "--cnf", "f.cnf"]);
    ok(p, &["transform", "p0w", "--in", "f.res", "--cnf", "f.cnf", "--out", "w.p0"]);
    ok(p, &["check", "p0", "--in", "w.p0", "--cnf", "f.cnf"]);
    ok(p, &["transform", "delete", "--in", "f.res", "--vars", "3", "--out", "d.res"]);
    ok(p, &["dot", "--in", "f.res", "--out", "f.dot"]);
    assert!(fs::read_to_string(p.join("f.dot")).unwrap().starts_with("digraph"));
}

#[test]
fn tampered_pivot_is_reported_with_its_node() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    fs::write(p.join("t.cnf"), "p cnf 2 3\n1 0\n-1 2 0\n-2 0\n").unwrap();
    fs::write(p.join("good.res"), "p res 2\na 10 1 0\na 20 -1 2 0\nr 30 10 20 1 2 0\na 40 -2 0\nr 50 30 40 2 0\n").unwrap();
    ok(p, &["check", "res", "--in", "good.res", "--cnf", "t.cnf"]);
    fs::write(p.join("bad.res"), "p res 2\na 10 1 0\na 20 -1 2 0\nr 30 10 20 2 2 0\na 40 -2 0\nr 50 30 40 2 0\n").unwrap();
    let o = tp(p, &["check", "res", "--in", "bad.res", "--cnf", "t.cnf"]);
    assert_eq!(code(&o), 1);
    let r = report(&o);
    assert_eq!(r["node"], 30);
    assert_eq!(r["violation"]["code"], "pivot-mismatch");
}

#[test]
fn run_check_names_the_first_offending_step() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(p, &["gen", "ind", "--n", "3", "--out", "i.cnf"]);
    fs::write(p.join("r.run"), "p run 3\nu 1 1 2\nd 3 0\n").unwrap();
    ok(p, &["check", "run", "--in", "r.run", "--cnf", "i.cnf"]);
    let o = tp(p, &["check", "run", "--in", "r.run", "--cnf", "i.cnf", "--amendments", "π-D"]);
    assert_eq!(code(&o), 1);
    assert_eq!(report(&o)["violation"]["location"], 2);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    fs::write(p.join("bad.cnf"), "p cnf 2 1\n1 5 0\n").unwrap();
    assert_eq!(code(&tp(p, &["prove", "--cnf", "bad.cnf"])), 2);
    assert_eq!(code(&tp(p, &["prove", "--cnf", "missing.cnf"])), 2);
    assert_eq!(code(&tp(p, &["frobnicate"])), 2);
    assert_eq!(code(&tp(p, &["gen", "stone", "--n", "1"])), 2);
    fs::write(p.join("sat.cnf"), "p cnf 2 1\n1 2 0\n").unwrap();
    assert_eq!(code(&tp(p, &["prove", "--cnf", "sat.cnf"])), 1);
    ok(p, &["gen", "random", "--n", "9", "--m", "60", "--seed", "3", "--out", "r.cnf"]);
    assert_eq!(code(&tp(p, &["prove", "--cnf", "r.cnf", "--budget", "5"])), 3);
    ok(p, &["gen", "ind", "--n", "8", "--out", "i.cnf"]);
    let o = tp(p, &["simulate", "--cnf", "i.cnf", "--budget", "3"]);
    assert_eq!(code(&o), 3);
    assert_eq!(report(&o)["outcome"], "step-budget");
}

#[test]
fn sat_oracle_prints_a_model() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("s.cnf"), "p cnf 2 2\n1 2 0\n-1 0\n").unwrap();
    let r = ok(d.path(), &["oracle", "sat", "--cnf", "s.cnf"]);
    assert_eq!(r["sat"], true);
    assert_eq!(r["model"], serde_json::json!([-1, 2]));
}

#[test]
fn width_commands() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(p, &["gen", "indxor", "--n", "2", "--r", "3", "--out", "x.cnf", "--order-out", "x.ord"]);
    let cert = ok(p, &["width", "robust", "--cnf", "x.cnf", "--order", "x.ord", "--k", "2"]);
    assert_eq!(cert["verdict"], true);
    assert_eq!(cert["coverage"], 1.0);
    let o = tp(p, &["width", "robust", "--cnf", "x.cnf", "--order", "x.ord", "--k", "2", "--budget", "5"]);
    assert_eq!(code(&o), 3);
    ok(p, &["prove", "--cnf", "x.cnf", "--out", "x.res"]);
    ok(p, &["transform", "psim", "--in", "x.res", "--cnf", "x.cnf", "--order", "x.ord", "--out", "x.p0"]);
    let a = ok(p, &["width", "audit", "--p0", "x.p0", "--cnf", "x.cnf", "--w", "2"]);
    assert!(a["width"].as_u64().unwrap() >= 2);
}

#[test]
fn decision_learning_pipeline_writes_csv() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    fs::write(
        p.join("spec.json"),
        r#"{"name": "ind6", "family": {"kind": "ind", "n": 6}, "amendments": "π-D,DECISION-L",
            "stages": ["simulate", "verify", "cdcl2half", "check-half", "half2ordered", "check-ordered"]}"#,
    )
    .unwrap();
    ok(p, &["pipeline", "--spec", "spec.json", "--csv", "out.csv"]);
    let mut rd = csv::Reader::from_path(p.join("out.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| &r[0] == "ind6" && &r[7] == "true"));
}

#[test]
fn main_pipeline_from_flags() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(p, &["gen", "random", "--n", "6", "--m", "40", "--seed", "4", "--out", "r.cnf"]);
    let r = ok(p, &["pipeline", "--cnf", "r.cnf", "--stages", "oracle,psim,check,p02cdcl,verify", "--amendments", "π-D,FIRST-L"]);
    assert_eq!(r["stage"], "verify");
    assert_eq!(r["pass"], true);
    ok(p, &["pipeline"]);
}

#[test]
fn pipeline_stage_failure_names_the_stage() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(p, &["gen", "ind", "--n", "3", "--out", "i.cnf"]);
    let o = tp(p, &["pipeline", "--cnf", "i.cnf", "--stages", "psim"]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage `psim`"));
}

#[test]
fn satisfiable_input_fails_the_oracle_stage() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("s.cnf"), "p cnf 2 1\n1 2 0\n").unwrap();
    let o = tp(d.path(), &["pipeline", "--cnf", "s.cnf", "--stages", "oracle,psim"]);
    assert_eq!(code(&o), 1);
    assert_eq!(report(&o)["pass"], false);
}
