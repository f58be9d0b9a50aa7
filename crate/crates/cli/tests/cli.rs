//! End-to-end runs of the `roam` binary.

use std::process::Command;

use serde_json::Value;

fn roam(args: &[&str]) -> (bool, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_roam")).args(args).output().expect("binary runs");
    (out.status.success(), String::from_utf8(out.stdout).expect("utf-8 output"))
}

fn json(args: &[&str]) -> Value {
    let (ok, text) = roam(args);
    assert!(ok, "roam {args:?} failed");
    serde_json::from_str(&text).expect("JSON output")
}

#[test]
fn generate_solve_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("adv.json");
    let p = path.to_str().unwrap();
    let (ok, _) = roam(&["gen", "--kind", "adversarial", "--n", "4", "--sbar", "0,2,4", "--seed", "1", "-o", p]);
    assert!(ok);
    let solved = json(&["solve", "--instance", p, "--method", "brute"]);
    assert_eq!(solved["assortment"], serde_json::json!([0, 2, 4]));
    let eval = json(&["eval", "--instance", p, "--assortment", "0,2,4", "--best"]);
    let worst = eval["worst"].as_f64().unwrap();
    assert!((worst - solved["value"].as_f64().unwrap()).abs() < 1e-9);
    assert!(eval["best"].as_f64().unwrap() >= worst - 1e-9);
    let oracle = json(&["oracle", "--instance", p, "--check", "all"]);
    assert!(oracle["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    let eta = json(&["min-eta", "--instance", p]);
    assert!(eta["min_eta"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn pareto_frontier_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested.json");
    let p = path.to_str().unwrap();
    assert!(roam(&["gen", "--kind", "nested", "--n", "6", "--m", "3", "--seed", "2", "-o", p]).0);
    let front = json(&["pareto", "--instance", p, "--grid", "11"]);
    let rows = front["frontier"].as_array().unwrap();
    assert!(!rows.is_empty());
    let worst: Vec<f64> = rows.iter().map(|r| r["worst"].as_f64().unwrap()).collect();
    assert!(worst.windows(2).all(|w| w[0] <= w[1] + 1e-9));
}

#[test]
fn experiment_csv_and_bad_input() {
    let (ok, csv) = roam(&["experiment", "--name", "fig1_2", "--reps", "3", "--seed", "1"]);
    assert!(ok);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "rep,best_past,worst_new,best_new");
    assert_eq!(lines.len(), 4);
    assert!(!roam(&["experiment", "--name", "fig9", "--reps", "1"]).0);
    assert!(!roam(&["solve", "--instance", "/nonexistent.json"]).0);
}
