//! Binary-level checks: flag handling, exit codes, output formats, and the
//! worked-example run through the real executable.

use std::process::{Command, Output};
use std::time::Instant;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdc-forge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn simulate_worked_example() {
    let start = Instant::now();
    let out = run(&["simulate", "--n", "6", "--t", "4", "--seed", "7"]);
    let elapsed = start.elapsed();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("node 0: [0, 1, 2, 3]"));
    assert!(text.contains("node 5: [0, 1, 2, 5]"));
    assert!(text.contains("v[5,0] + v[5,1] + v[5,2] + v[5,3]"));
    assert!(text.contains("v[5,1] + a1*v[5,2] + v[5,3] + v[5,4]"));
    assert!(text.contains("measured L  = 1/3"));
    assert!(text.contains("load identity: exact match"));
    assert!(text.contains("verification: PASS"));
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("ACCEPTANCE 1 (cli) simulate --n 6 --t 4: PASS ({elapsed:?})");
}

#[test]
fn simulate_other_points() {
    let out = run(&["simulate", "--n", "12", "--t", "8"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("measured L  = 1/3"));

    let out = run(&["simulate", "--n", "9", "--t", "8"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("measured L  = 1/9"));
}

#[test]
fn simulate_json_format() {
    let out = run(&["simulate", "--n", "6", "--t", "4", "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["measured_load"]["num"], "1");
    assert_eq!(doc["measured_load"]["den"], "3");
    assert_eq!(doc["verification_pass"], true);
    assert_eq!(doc["load_identity"], true);
}

#[test]
fn build_rejects_inadmissible_pair_by_name() {
    let out = run(&["build", "--n", "5", "--t", "3"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("3t >= 2n"), "{}", stderr(&out));
}

#[test]
fn build_writes_plan_document() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.json");
    let out = run(&["build", "--n", "6", "--t", "4", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("predicted L   1/3"));
    let text = std::fs::read_to_string(&path).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["params"]["n"], 6);
    assert_eq!(doc["coeffs"], serde_json::json!([1, 2]));
}

#[test]
fn build_small_field_has_room_for_coefficients() {
    // 2t - n + 1 = 9 distinct values fit in GF(2^4)
    let out = run(&["build", "--n", "20", "--t", "14", "--field-T", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("GF(2^4)"));
    // but not in GF(2^3)
    let out = run(&["build", "--n", "20", "--t", "14", "--field-T", "3"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("2^T >= 2t - n + 1"));
}

#[test]
fn build_csv_row() {
    let out = run(&["build", "--n", "6", "--t", "4", "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,K,r,s,N,Q,load_num,load_den,load_float"
    );
    assert_eq!(lines.next().unwrap(), "new,6,4,4,6,6,1,3,0.333333333333");
}

#[test]
fn simulate_transcript_dump() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transcript.jsonl");
    let out = run(&[
        "simulate", "--n", "6", "--t", "4", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 12);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["payload"].is_string());
    }
}

#[test]
fn verify_design_verdicts() {
    let out = run(&["verify-design", "--n", "5", "--t", "3", "--check", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("not a 2-design"));
    assert!(text.contains("witness"));
    assert!(text.contains("[0, 1]") && text.contains("[0, 2]"));

    let out = run(&["verify-design", "--n", "6", "--t", "4", "--check", "1"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("1-(6,4,4) design"));

    let out = run(&["verify-design", "--n", "6", "--t", "4", "--check", "0"]);
    assert!(!out.status.success());
}

#[test]
fn sweep_fig2_rows_and_bounds() {
    let out = run(&["sweep-fig2", "--b-min", "3", "--b-max", "9"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 8); // header + 7 rows
    assert!(lines[1].starts_with("3,9,26,"));
    assert!(lines[1].contains(",4,13,"));

    let out = run(&["sweep-fig2", "--b-min", "2", "--b-max", "9"]);
    assert!(!out.status.success());
}

#[test]
fn sweep_fig3_exact_and_approx_columns() {
    let out = run(&["sweep-fig3", "--p-min", "2", "--p-max", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[1].starts_with("2,23,7,23,"));
    assert!(lines[1].contains("245157,exact"));
}

#[test]
fn check_lemma31_text_and_csv() {
    let out = run(&["check-lemma31", "--p-min", "3", "--p-max", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("p=3 w=2 y=4: main 1980 > 1430 HOLDS"));
    assert_eq!(text.lines().count(), 3);

    let out = run(&["check-lemma31", "--p-min", "11", "--p-max", "11", "--format", "csv"]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().nth(1).unwrap().starts_with("11,2,12,"));
}

#[test]
fn outputs_are_deterministic() {
    let a = run(&["sweep-fig2", "--b-min", "3", "--b-max", "12"]);
    let b = run(&["sweep-fig2", "--b-min", "3", "--b-max", "12"]);
    assert_eq!(a.stdout, b.stdout);

    let a = run(&["simulate", "--n", "8", "--t", "6", "--seed", "5"]);
    let b = run(&["simulate", "--n", "8", "--t", "6", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_cap_env_is_honored_and_validated() {
    let ok = Command::new(env!("CARGO_BIN_EXE_cdc-forge"))
        .args(["sweep-fig2", "--b-min", "3", "--b-max", "12"])
        .env("CDC_FORGE_THREADS", "1")
        .output()
        .unwrap();
    assert!(ok.status.success());
    let unlimited = run(&["sweep-fig2", "--b-min", "3", "--b-max", "12"]);
    assert_eq!(ok.stdout, unlimited.stdout);

    let bad = Command::new(env!("CARGO_BIN_EXE_cdc-forge"))
        .args(["sweep-fig2"])
        .env("CDC_FORGE_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!bad.status.success());
}
