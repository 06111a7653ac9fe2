mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{fixture, masked, package};

fn judge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_judge"))
        .args(args)
        .output()
        .expect("run judge")
}

fn run_json(source: &Path, language: &str) -> Output {
    let problem = package("echo");
    judge(&[
        "run",
        "-p",
        problem.to_str().unwrap(),
        "-s",
        source.to_str().unwrap(),
        "-l",
        language,
        "--json",
    ])
}

/// Decimal or `p/q` score text as a float.
fn number(text: &str) -> f64 {
    match text.split_once('/') {
        Some((p, q)) => p.parse::<f64>().unwrap() / q.parse::<f64>().unwrap(),
        None => text.parse().unwrap(),
    }
}

fn status_of(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    v["status"].as_str().unwrap().to_string()
}

#[test]
fn echo_fixtures_get_expected_status_and_exit_code() {
    let _guard = common::serial();
    for (file, status, code) in [
        ("echo.c", "ACC", 0),
        ("busy.c", "TLE", 1),
        ("wrong.c", "WA", 1),
        ("crash.c", "RE", 1),
        ("syntax_error.c", "CE", 1),
    ] {
        let first = run_json(&fixture(file), "c");
        assert_eq!(first.status.code(), Some(code), "{file}");
        assert_eq!(status_of(&first), status, "{file}");
        let second = run_json(&fixture(file), "c");
        assert_eq!(
            masked(std::str::from_utf8(&first.stdout).unwrap()),
            masked(std::str::from_utf8(&second.stdout).unwrap()),
            "{file}"
        );
    }
}

#[test]
fn human_output_names_the_first_failing_instance() {
    let _guard = common::serial();
    let problem = package("echo");
    let out = judge(&["run", "-p", problem.to_str().unwrap(), "-s", fixture("busy.c").to_str().unwrap(), "-l", "c"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("TLE on instance 1\n"), "{text}");
}

#[test]
fn corner_scores_against_the_reference_table() {
    let _guard = common::serial();
    let problem = package("facility");
    let out = judge(&["run", "-p", problem.to_str().unwrap(), "-s", fixture("corner.c").to_str().unwrap(), "-l", "c", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // Oracle: 100/|T| * sum(b_i / v_i) over the manifest references.
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(problem.join("manifest.json")).unwrap()).unwrap();
    let refs: Vec<f64> = manifest["reference_scores"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_f64().unwrap())
        .collect();
    let values: Vec<f64> = v["per_instance"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| number(o["score"].as_str().unwrap()))
        .collect();
    let expected: f64 = refs.iter().zip(&values).map(|(b, v)| b / v).sum::<f64>() * 100.0 / refs.len() as f64;
    let score = number(v["score"].as_str().unwrap());
    assert!((score - expected).abs() < 1e-6, "{score} vs {expected}");
    assert!(score < 100.0);

    let greedy = judge(&["run", "-p", problem.to_str().unwrap(), "-s", fixture("greedy.c").to_str().unwrap(), "-l", "c"]);
    assert_eq!(greedy.status.code(), Some(0));
    assert!(String::from_utf8(greedy.stdout).unwrap().starts_with("ACC\nscore 100.000000\n"));
}

#[test]
fn usage_errors_exit_with_two() {
    let out = judge(&["run", "-p", "/nonexistent", "-s", "x.c", "-l", "c"]);
    assert_eq!(out.status.code(), Some(2));
    let out = judge(&["run", "-p", package("echo").to_str().unwrap(), "-s", "x.c", "-l", "cobol"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown language"));
    assert_eq!(judge(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn gen_facility_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.in");
    let b = dir.path().join("b.in");
    for path in [&a, &b] {
        let out = judge(&["gen-facility", "10", "10", "3", "--seed", "7", "-o", path.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let data = std::fs::read(&a).unwrap();
    assert_eq!(data, std::fs::read(&b).unwrap());
    let instance = judge_core::facility::FacilityInstance::parse(&data).unwrap();
    assert_eq!(instance.factories(), 3);
    assert_eq!(instance, judge_core::facility::gen_facility(10, 10, 3, 7).unwrap());
}

#[test]
fn replay_writes_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let journal = dir.path().join("journal.jsonl");
    let plan = common::synth::plan(3, 50);
    let mut text = String::new();
    for r in common::synth::journal(&plan) {
        text.push_str(&serde_json::to_string(&r).unwrap());
        text.push('\n');
    }
    std::fs::write(&journal, text).unwrap();
    let csv = dir.path().join("out.csv");
    let svg = dir.path().join("out.svg");
    let out = judge(&[
        "replay",
        journal.to_str().unwrap(),
        "-o",
        csv.to_str().unwrap(),
        "--plot",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(judge::replay::CSV_HEADER));
    let ratios: Vec<f64> = lines
        .filter_map(|l| l.split(',').nth(1).filter(|s| !s.is_empty()).map(number))
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(*ratios.last().unwrap(), 1.0);
    assert!(std::fs::read_to_string(svg).unwrap().starts_with("<svg"));

    let missing = judge(&["replay", "/nonexistent.jsonl", "-o", "x.csv"]);
    assert_eq!(missing.status.code(), Some(2));
}
