//! Exit codes, determinism, and report contents of the `tabs` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn tabs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabs"))
        .args(args)
        .env("TABS_COLOR", "never")
        .output()
        .unwrap()
}

#[test]
fn cipm_json_reports_the_strengthened_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("out.json");
    let out = tabs(&[
        "cipm",
        fixture("ex1.ta").to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["invariants"]["l1"], "x <= y");
    assert_eq!(report["invariants"]["l0"], "y <= 1");
    assert_eq!(report["pruned_transitions"][0]["source"], "l1");
}

#[test]
fn abstract_json_reports_the_naive_counts() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("s.json");
    let out = tabs(&[
        "abstract",
        fixture("ex1.ta").to_str().unwrap(),
        "--compare-naive",
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["abstract_states"], 6);
    assert_eq!(report["reachable"], 4);
    assert_eq!(report["naive_paired"], 12);
    assert_eq!(report["naive_unfiltered"], 24);
}

#[test]
fn abstract_dot_dashes_exactly_the_unreachable_product_states() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let out = tabs(&[
        "abstract",
        fixture("ex2.ta").to_str().unwrap(),
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&dot).unwrap();
    let dashed: Vec<&str> = text.lines().filter(|l| l.contains("dashed")).collect();
    assert!(!dashed.is_empty());
    for line in text.lines() {
        let dead = line.contains("l4")
            || line.contains("s1,")
            || line.contains("s1\"")
            || line.contains(".s1");
        if dead && line.contains("label=") {
            assert!(line.contains("dashed"), "not dashed: {line}");
        }
    }
}

#[test]
fn json_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut blobs = Vec::new();
    for name in ["a.json", "b.json"] {
        let json = dir.path().join(name);
        let out = tabs(&[
            "abstract",
            fixture("ex2.ta").to_str().unwrap(),
            "--compare-naive",
            "--json",
            json.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        blobs.push(std::fs::read(&json).unwrap());
    }
    assert_eq!(blobs[0], blobs[1]);
}

#[test]
fn pruned_model_output_is_valid_input() {
    let dir = tempfile::tempdir().unwrap();
    let pruned = dir.path().join("pruned.ta");
    let out = tabs(&[
        "cipm",
        fixture("ex2.ta").to_str().unwrap(),
        "--out",
        pruned.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let again = tabs(&["stats", pruned.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
}

#[test]
fn validate_passes_on_both_fixtures() {
    for name in ["ex1.ta", "ex2.ta"] {
        let out = tabs(&["validate", fixture(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert_eq!(stdout.matches("PASS").count(), 3, "{name}: {stdout}");
    }
}

#[test]
fn truncated_validation_is_inconclusive() {
    let out = tabs(&[
        "validate",
        fixture("ex2.ta").to_str().unwrap(),
        "--steps",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("inconclusive"));
}

#[test]
fn missing_input_exits_2_and_names_the_path() {
    let out = tabs(&["cipm", "/no/such/file.ta"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("/no/such/file.ta"));
}

#[test]
fn syntax_errors_exit_1_with_a_span() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ta");
    std::fs::write(&bad, "automaton A { init l0; location l0 inv x < }").unwrap();
    let out = tabs(&["cipm", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("bad.ta:1:"), "{stderr}");
}
