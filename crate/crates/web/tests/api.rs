use std::f64::consts::PI;

use consensus_web::{analyze_json, roots_json, simulate_json};
use serde_json::{json, Value};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

fn two_node() -> Value {
    json!({ "preset": "table", "edges": "2\n1 2 1.0\n2 1 1.0" })
}

#[test]
fn simulate_constant_history_is_at_rest() {
    let input = json!({
        "network": { "preset": "ring", "nodes": 4 },
        "model": "propagation", "kernel": "uniform", "tau": 1.0,
        "values": [2.5, 2.5, 2.5, 2.5], "horizon": 5.0, "step": 0.05,
    });
    let r = parse(simulate_json(&input.to_string()).unwrap());
    assert_eq!(r["detected_value"], 2.5);
    assert_eq!(r["predicted_value"], 2.5);
    assert_eq!(r["times"][0], 0.0);
    assert_eq!(r["times"].as_array().unwrap().last().unwrap().as_f64(), Some(5.0));
}

#[test]
fn simulate_subsamples_and_matches_prediction() {
    let input = json!({
        "network": { "preset": "complete", "nodes": 3, "gain": 0.5 },
        "model": "processing", "kernel": "discrete", "tau": 0.3,
        "values": [1.0, 2.0, 6.0], "horizon": 40.0, "step": 0.01, "samples": 100,
    });
    let r = parse(simulate_json(&input.to_string()).unwrap());
    assert!(r["times"].as_array().unwrap().len() <= 101);
    assert_eq!(r["states"][0].as_array().unwrap().len(), 3);
    let c = r["detected_value"].as_f64().unwrap();
    assert!((c - 3.0).abs() < 1e-5, "{c}");
    assert!(r["relative_q_drift"].as_f64().unwrap() < 1e-8);
}

#[test]
fn simulate_rejects_bad_input() {
    let too_long = json!({
        "network": { "preset": "ring", "nodes": 3 },
        "model": "processing", "kernel": "discrete", "tau": 0.1,
        "values": [0, 1, 2], "horizon": 1e4, "step": 1e-3,
    });
    assert!(simulate_json(&too_long.to_string()).unwrap_err().contains("at most"));
    assert!(simulate_json("{").unwrap_err().starts_with("bad input"));
    let wrong_len = json!({
        "network": two_node(), "model": "processing", "kernel": "discrete", "tau": 0.1,
        "values": [0, 1, 2], "horizon": 1.0, "step": 0.1,
    });
    assert!(simulate_json(&wrong_len.to_string()).is_err());
}

#[test]
fn analyze_reports_threshold_and_stationary() {
    let input = json!({
        "network": { "preset": "complete", "nodes": 3, "gain": 1.0 },
        "model": "processing", "kernel": "discrete", "tau": 0.4,
    });
    let r = parse(analyze_json(&input.to_string()).unwrap());
    assert!((r["threshold"].as_f64().unwrap() - PI / 6.0).abs() < 1e-9);
    assert_eq!(r["verdict"], "consensus");
    for p in r["stationary"].as_array().unwrap() {
        assert!((p.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
    assert!(r["laplacian_eigenvalues"][0]["re"].is_number());

    let uniform = json!({ "network": two_node(), "model": "processing", "kernel": "uniform", "tau": 0.4 });
    assert!(analyze_json(&uniform.to_string()).is_err());
}

#[test]
fn roots_cross_threshold() {
    let stable = parse(roots_json(2.0, 0.0, "discrete", 0.7).unwrap());
    assert!(stable["rightmost_real_part"].as_f64().unwrap() < 0.0);
    assert!((stable["threshold"].as_f64().unwrap() - PI / 4.0).abs() < 1e-15);
    let unstable = parse(roots_json(2.0, 0.0, "discrete", 0.9).unwrap());
    assert!(unstable["rightmost_real_part"].as_f64().unwrap() > 0.0);

    let uniform = parse(roots_json(1.0, 0.5, "uniform", 1.0).unwrap());
    assert!(uniform["threshold"].is_null());
    assert!(roots_json(1.0, 0.0, "gamma", 1.0).is_err());
}
