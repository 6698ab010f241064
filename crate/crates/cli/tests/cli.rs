use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn screening(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_screening")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on standard output")
}

#[test]
fn solve_prints_the_three_item_menu() {
    let out = screening(&["solve", "--prior", "uniform", "--cost", "power:2", "--b", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let items: Vec<(f64, f64)> = v["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|it| (it["q"].as_f64().unwrap(), it["t"].as_f64().unwrap()))
        .collect();
    assert_eq!(items, vec![(0.1, 0.05), (0.5, 0.33), (0.9, 0.69)]);
    assert_eq!(v["regime"], "intermediary_constrained");
}

#[test]
fn single_item_menu_fails_verification_below_threshold() {
    let out = screening(&["verify", "--b", "0.2", "--menu", r#"[{"q":0.6667,"t":0.4444}]"#]);
    assert_eq!(out.status.code(), Some(4));
    assert!(json(&out)["obedience"]["gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn single_item_menu_passes_above_threshold() {
    let out = screening(&["verify", "--b", "0.4", "--menu", r#"[{"q":0.666666666667,"t":0.444444444444}]"#]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn zero_bias_is_a_config_error() {
    let out = screening(&["closed-form", "--b", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("b:"));
    assert!(out.stdout.is_empty());
}

#[test]
fn solve_output_verifies_when_piped_back() {
    for args in [vec!["--b", "0.05"], vec!["--b", "0.25"], vec!["--b", "0.4"], vec!["--b", "0.1", "--cap", "2"]] {
        let mut solve_args = vec!["solve"];
        solve_args.extend(&args);
        let solved = screening(&solve_args);
        assert_eq!(solved.status.code(), Some(0));
        let mut child = Command::new(env!("CARGO_BIN_EXE_screening"))
            .args(["verify", "--input", "-"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        child.stdin.take().unwrap().write_all(&solved.stdout).unwrap();
        let out = child.wait_with_output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert_eq!(json(&out)["certificate"]["passed"], true);
    }
}

#[test]
fn sweep_is_identical_across_thread_counts() {
    let one = screening(&["sweep", "--b-grid", "0.02:0.4:12", "--jobs", "1"]);
    let four = screening(&["sweep", "--b-grid", "0.02:0.4:12", "--jobs", "4"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("b,regime,n_items,profit,rent,total_surplus,distortion,avg_quality,trade_prob"));
    assert_eq!(lines.count(), 12);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = screening(&["solve", "--b", "0.07", "--cap", "3"]);
    let b = screening(&["solve", "--b", "0.07", "--cap", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out_path = dir.path().join("out.json");
    std::fs::write(&cfg, format!(r#"{{"b": 0.4, "output": "{}"}}"#, out_path.display())).unwrap();
    let out = screening(&["solve", "--config", cfg.to_str().unwrap(), "--b", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["b"], 0.1);
    assert_eq!(v["items"].as_array().unwrap().len(), 3);
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"bias": 0.1}"#).unwrap();
    let out = screening(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bias"));
}

#[test]
fn bad_specs_are_config_errors() {
    assert_eq!(screening(&["solve", "--b", "0.1", "--prior", "normal"]).status.code(), Some(2));
    assert_eq!(screening(&["solve", "--b", "0.1", "--cost", "power:1"]).status.code(), Some(2));
    assert_eq!(screening(&["solve", "--b", "0.1", "--regime", "other"]).status.code(), Some(2));
    assert_eq!(screening(&["sweep", "--b-grid", "0.2,0.1"]).status.code(), Some(2));
    assert_eq!(screening(&["closed-form", "--b", "0.4"]).status.code(), Some(2));
}

#[test]
fn other_subcommands() {
    let v = json(&screening(&["compare", "--b", "0.1"]));
    for key in ["mussa_rosen", "intermediary", "bhm"] {
        assert!(v[key]["stats"]["profit"].is_number(), "{key}");
    }
    let v = json(&screening(&["closed-form", "--b", "0.05", "--cap", "3"]));
    let q: Vec<f64> = v["items"].as_array().unwrap().iter().map(|it| it["q"].as_f64().unwrap()).collect();
    assert_eq!(q, vec![0.3, 0.6, 0.9]);
    let v = json(&screening(&["solve", "--regime", "mussa-rosen"]));
    assert_eq!(v["exclusion_cutoff"], 0.5);
    let v = json(&screening(&["solve", "--regime", "bhm", "--b", "0.4"]));
    assert_eq!(v["regime"], "bhm");
    let v = json(&screening(&["solve", "--regime", "bhm-finite", "--items", "2"]));
    assert!(v["profit"].as_f64().unwrap() > 0.14);
    let v = json(&screening(&["oracle", "--b", "0.4", "--menu", r#"[{"q":0.666666666667,"t":0.444444444444}]"#]));
    assert!((v["value"].as_f64().unwrap() - 0.177777777778).abs() < 1e-3);
}
