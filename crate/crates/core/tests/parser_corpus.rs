//! Replays the checked-in fuzz corpus through every text entry point. Each input must
//! either be rejected with an error or parse into a value whose emitted form parses back
//! to the same value.

use std::fs;
use std::path::PathBuf;

use renyi_core::report::{records_from_csv, records_to_csv, report_from_json, report_to_json};
use renyi_core::sweep::{parse_dims, parse_orders, SweepConfig, MAX_TOTAL_DIM};

fn corpus(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let bytes = fs::read(&path).unwrap();
            (path.display().to_string(), String::from_utf8_lossy(&bytes).into_owned())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "empty corpus for {target}");
    out
}

#[test]
fn config_corpus() {
    let mut accepted = 0;
    for (name, text) in corpus("config") {
        if let Ok(cfg) = SweepConfig::from_kv_text(&text) {
            accepted += 1;
            let again = SweepConfig::from_kv_text(&cfg.to_kv_text()).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(again, cfg, "{name}");
        }
    }
    assert!(accepted > 0);
}

#[test]
fn dims_corpus() {
    let mut accepted = 0;
    for (name, text) in corpus("dims") {
        if let Ok(dims) = parse_dims(&text) {
            accepted += 1;
            assert!(dims.iter().all(|&(a, b)| a >= 2 && b >= 2 && a * b <= MAX_TOTAL_DIM), "{name}");
        }
    }
    assert!(accepted > 0);
}

#[test]
fn orders_corpus() {
    let mut accepted = 0;
    for (name, text) in corpus("orders") {
        if let Ok(groups) = parse_orders(&text) {
            accepted += 1;
            assert!(groups.iter().flatten().all(|o| o.value() > 0.0), "{name}");
        }
    }
    assert!(accepted > 0);
}

#[test]
fn records_csv_corpus() {
    let mut accepted = 0;
    for (name, text) in corpus("records_csv") {
        if let Ok(records) = records_from_csv(&text) {
            accepted += 1;
            let emitted = records_to_csv(&records);
            let again = records_from_csv(&emitted).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(records_to_csv(&again), emitted, "{name}");
        }
    }
    assert!(accepted > 0);
}

#[test]
fn report_json_corpus() {
    let mut accepted = 0;
    for (name, text) in corpus("report_json") {
        if let Ok(report) = report_from_json(&text) {
            accepted += 1;
            let emitted = report_to_json(&report);
            let again = report_from_json(&emitted).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(report_to_json(&again), emitted, "{name}");
        }
    }
    assert!(accepted > 0);
}

#[test]
fn malformed_inputs_are_errors() {
    assert!(parse_dims("").is_err());
    assert!(parse_dims("2x").is_err());
    assert!(parse_dims("1x2").is_err());
    assert!(parse_dims("8x8").is_err());
    assert!(parse_orders("1/0,2").is_err());
    assert!(parse_orders("-1,2,2").is_err());
    assert!(SweepConfig::from_kv_text("trials = 0").is_err());
    assert!(SweepConfig::from_kv_text("colour = blue").is_err());
    assert!(SweepConfig::from_kv_text("trials = 3\ntrials = 4").is_err());
    assert!(records_from_csv("suite,name\nthm1,x\n").is_err());
    assert!(report_from_json("{").is_err());
    assert!(report_from_json("[]").is_err());
}
