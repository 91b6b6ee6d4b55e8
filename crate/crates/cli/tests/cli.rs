use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn tuning(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tuning"))
        .args(args)
        .env_remove("TUNING_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn solve_reference_model() {
    let out = tuning(&[
        "solve",
        "--model",
        &fixture("reference.json"),
        "--direction",
        "max",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["m0_star"], 3);
    assert_eq!(doc["m1_star"], 3);
    assert!((doc["value"].as_f64().unwrap() - 129.0 / 45.0).abs() < 1e-12);
    assert!(doc["refutation"].is_null());

    let out = tuning(&[
        "solve",
        "--model",
        &fixture("reference.json"),
        "--direction",
        "min",
        "--refute-samples",
        "500",
    ]);
    let doc = json(&out);
    assert_eq!(
        (doc["m0_star"].as_u64(), doc["m1_star"].as_u64()),
        (Some(2), Some(2))
    );
    assert_eq!(doc["refutation"]["violations"], 0);
    assert_eq!(doc["refutation"]["samples"], 500);
}

#[test]
fn solve_writes_table_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    let out = tuning(&[
        "solve",
        "--model",
        &fixture("reference.json"),
        "--table-csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "m0\\m1,2,3");
    assert!(lines[1].starts_with("2,1.9,"));
    assert_eq!(lines.len(), 3);
}

#[test]
fn table_variants() {
    let model = fixture("reference.json");
    let b = stdout(&tuning(&["table", "--model", &model, "--which", "b"]));
    let row: Vec<f64> = b
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((row[0] - 1.0).abs() < 1e-14);

    let out = tuning(&["table", "--model", &model, "--format", "json"]);
    let doc = json(&out);
    assert!((doc[1][1].as_f64().unwrap() - 43.0 / 15.0).abs() < 1e-13);
}

#[test]
fn analyze_outputs() {
    let model = fixture("reference.json");
    let doc = json(&tuning(&["analyze", "--model", &model]));
    assert!((doc["b"][1][0].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-14);
    assert!((doc["r"][0].as_f64().unwrap() - 2.5).abs() < 1e-14);
    assert_eq!(doc["positivity"]["errors"].as_array().unwrap().len(), 0);

    let doc = json(&tuning(&["analyze", "--model", &model, "--epsilon", "0.4"]));
    assert_eq!(doc["positivity"]["errors"][0]["code"], "B_NOT_POSITIVE");
    assert_eq!(doc["positivity"]["errors"][0]["state"], 3);

    let csv = stdout(&tuning(&["analyze", "--model", &model, "--format", "csv"]));
    assert_eq!(csv.lines().next().unwrap(), "state,b0,b1,r");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn indicator_routes_and_sources() {
    let model = fixture("reference.json");
    let mut values = Vec::new();
    for route in ["embedded", "ratio", "fractional"] {
        let doc = json(&tuning(&[
            "indicator",
            "--model",
            &model,
            "--strategy",
            &fixture("uniform_strategy.json"),
            "--route",
            route,
        ]));
        assert_eq!(doc["route"], route);
        values.push(doc["value"].as_f64().unwrap());
    }
    assert!(values
        .iter()
        .all(|v| (v - values[0]).abs() <= 1e-12 * values[0].abs()));

    let doc = json(&tuning(&[
        "indicator",
        "--model",
        &model,
        "--degenerate",
        "3",
        "3",
    ]));
    assert!((doc["value"].as_f64().unwrap() - 129.0 / 45.0).abs() < 1e-12);
    assert!((doc["pi"][0].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-14);

    // both sources at once, or neither
    let out = tuning(&[
        "indicator",
        "--model",
        &model,
        "--degenerate",
        "3",
        "3",
        "--strategy",
        &fixture("uniform_strategy.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = tuning(&["indicator", "--model", &model]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], "USAGE");

    let out = tuning(&["indicator", "--model", &model, "--degenerate", "5", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], "LABEL_OUT_OF_RANGE");

    let out = tuning(&[
        "indicator",
        "--model",
        &model,
        "--degenerate",
        "2",
        "2",
        "--route",
        "fast",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "--model",
        &fixture("reference.json"),
        "--degenerate",
        "3",
        "3",
        "--cycles",
        "100000",
        "--seed",
        "42",
    ];
    let first = tuning(&args);
    let second = tuning(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let doc = json(&first);
    assert_eq!(doc["cycles"], 100_000);
    assert_eq!(doc["seed"], 42);
    let se = doc["std_error"].as_f64().unwrap();
    assert!((doc["i_hat"].as_f64().unwrap() - 129.0 / 45.0).abs() <= 4.0 * se);
}

#[test]
fn seed_from_environment() {
    let model = fixture("reference.json");
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_tuning"));
        cmd.args([
            "simulate",
            "--model",
            &model,
            "--degenerate",
            "2",
            "3",
            "--cycles",
            "1000",
        ])
        .args(extra);
        match env {
            Some(seed) => cmd.env("TUNING_SEED", seed),
            None => cmd.env_remove("TUNING_SEED"),
        };
        json(&cmd.output().unwrap())
    };
    assert_eq!(run(Some("9"), &[])["seed"], 9);
    assert_eq!(run(Some("9"), &[])["i_hat"], run(None, &["--seed", "9"])["i_hat"]);
    assert_eq!(run(Some("9"), &["--seed", "4"])["seed"], 4);
    assert_eq!(run(None, &[])["seed"], 0);
}

#[test]
fn replications_pool_cycles() {
    let doc = json(&tuning(&[
        "simulate",
        "--model",
        &fixture("reference.json"),
        "--strategy",
        &fixture("uniform_strategy.json"),
        "--cycles",
        "2000",
        "--replications",
        "3",
    ]));
    assert_eq!(doc["cycles"], 6000);
    assert_eq!(doc["replications"], 3);
}

#[test]
fn trajectory_csv() {
    let out = tuning(&[
        "trajectory",
        "--model",
        &fixture("one_step.json"),
        "--degenerate",
        "2",
        "2",
        "--max-steps",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,state,event_kind,income_delta");
    assert_eq!(lines[1], "0,2,free_move,5");
    assert!(lines[2].ends_with(",absorption,0"));
    assert!(lines[3].starts_with("2,2,transfer,4"));
    assert_eq!(lines.len(), 6);

    let doc = json(&tuning(&[
        "trajectory",
        "--model",
        &fixture("one_step.json"),
        "--degenerate",
        "2",
        "2",
        "--max-steps",
        "3",
        "--format",
        "json",
    ]));
    assert_eq!(doc[1]["event_kind"], "absorption");
}

#[test]
fn echo_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let echo = dir.path().join("echo.json");
    let echo = echo.to_str().unwrap();
    let original = tuning(&[
        "analyze",
        "--model",
        &fixture("reference.json"),
        "--echo-model",
        echo,
    ]);
    assert_eq!(original.status.code(), Some(0));
    let validate = tuning(&["validate", "--model", echo]);
    assert_eq!(validate.status.code(), Some(0));
    assert_eq!(json(&validate)["valid"], true);
    let again = tuning(&["analyze", "--model", echo]);
    assert_eq!(original.stdout, again.stdout);
}

#[test]
fn output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = tuning(&[
        "--output",
        path.to_str().unwrap(),
        "solve",
        "--model",
        &fixture("reference.json"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(doc["m0_star"], 3);
}

#[test]
fn validation_failures_exit_with_one() {
    let out = tuning(&["validate", "--model", &fixture("row_sum.json")]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&out);
    assert_eq!(doc["valid"], false);
    assert_eq!(doc["model"]["errors"][0]["code"], "ROW_SUM");
    assert_eq!(doc["model"]["errors"][0]["state"], 3);

    let out = tuning(&["solve", "--model", &fixture("row_sum.json")]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&out);
    assert_eq!(doc["error"]["code"], "INVALID_MODEL");
    assert_eq!(doc["report"]["errors"][0]["code"], "ROW_SUM");

    let out = tuning(&[
        "validate",
        "--model",
        &fixture("reference.json"),
        "--strategy",
        &fixture("one_step.json"),
    ]);
    assert_eq!(out.status.code(), Some(2), "model file is not a strategy");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("s.json");
    std::fs::write(&bad, r#"{"alpha0":[0.5,0.6],"alpha1":[0,1]}"#).unwrap();
    let out = tuning(&[
        "validate",
        "--model",
        &fixture("reference.json"),
        "--strategy",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["strategy"]["errors"][0]["code"], "NOT_NORMALIZED");
    let out = tuning(&[
        "simulate",
        "--model",
        &fixture("reference.json"),
        "--strategy",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["code"], "INVALID_STRATEGY");
}

#[test]
fn input_errors_exit_with_two() {
    let out = tuning(&["solve", "--model", "/nonexistent/model.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], "IO_ERROR");

    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("m.json");
    std::fs::write(&garbage, "{\"n_internal\": 2").unwrap();
    let out = tuning(&["solve", "--model", garbage.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], "PARSE_ERROR");

    let out = tuning(&["solve", "--model", &fixture("reference.json"), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));

    let out = tuning(&["solve"]);
    assert_eq!(out.status.code(), Some(2));

    let out = tuning(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn numbers_keep_full_precision() {
    let doc = json(&tuning(&["solve", "--model", &fixture("reference.json")]));
    let text = doc["c_table"][1][0].to_string();
    let parsed: f64 = text.parse().unwrap();
    assert_eq!(parsed, 71.0 / 35.0);
    assert!(text.trim_start_matches("2.").len() >= 15, "{text}");
}
