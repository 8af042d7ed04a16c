//! End-to-end checks of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn dvfsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dvfsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn partition_resnet18_prints_two_blocks() {
    let graph = fixtures().join("resnet18.json");
    let profile = fixtures().join("orin_nano.json");
    // the calibrated per-operator latency budget from the bundled scenario
    let scenario: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(fixtures().join("scenarios").join("resnet18.json")).unwrap(),
    )
    .unwrap();
    let budget = scenario["partition"]["budget"].as_f64().unwrap().to_string();
    let out = dvfsim(&[
        "partition",
        "--graph",
        graph.to_str().unwrap(),
        "--profile",
        profile.to_str().unwrap(),
        "--n",
        "5",
        "--budget",
        &budget,
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("blocks: 2"), "got: {text}");
    assert!(text.contains("switching_reduction"), "got: {text}");
}

#[test]
fn partition_single_operator_graph() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("one.json");
    std::fs::write(
        &graph,
        r#"{"name":"one","operators":[{"id":"a","w_comp":1e9,"d_mem":1e6,"s_comp":0}],"edges":[]}"#,
    )
    .unwrap();
    let profile = fixtures().join("orin_nano.json");
    let out = dvfsim(&[
        "partition",
        "--graph",
        graph.to_str().unwrap(),
        "--profile",
        profile.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("blocks: 1"));
}

#[test]
fn missing_file_fails_with_path_in_message() {
    let out = dvfsim(&[
        "partition",
        "--graph",
        "/nonexistent/net.json",
        "--profile",
        "/nonexistent/dev.json",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/nonexistent/net.json"), "stderr: {err}");
}

#[test]
fn schedule_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("schedule.json");
    let graph = fixtures().join("vit_b16.json");
    let profile = fixtures().join("orin_nano.json");
    let out = dvfsim(&[
        "partition",
        "--graph",
        graph.to_str().unwrap(),
        "--profile",
        profile.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["graph"], "vit_b16");
    assert!(v["blocks"].as_array().unwrap().len() >= 2);
}

#[test]
fn simulate_emits_csv_trace() {
    let scenario = fixtures().join("scenarios").join("resnet18.json");
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("trace.csv");
    let out = dvfsim(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("# dvfsim trace v1"));
    assert!(text.lines().count() > 10);
}

#[test]
fn compare_self_baseline_reports_zero_gain() {
    let scenario = fixtures().join("scenarios").join("resnet18.json");
    let out = dvfsim(&[
        "compare",
        "--scenario",
        scenario.to_str().unwrap(),
        "--policy",
        "reactive_default",
        "--baseline",
        "reactive_default",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text
        .lines()
        .find(|l| l.starts_with("reactive_default"))
        .expect("baseline row present");
    let gain: f64 = row.split(',').nth(7).unwrap().parse().unwrap();
    assert_eq!(gain, 0.0);
}

#[test]
fn compare_report_shape_and_csv_recompute() {
    let scenario = fixtures().join("scenarios").join("vit_b16.json");
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("report.json");
    let out = dvfsim(&[
        "compare",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        json_path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    // default policy set: 4 summaries, 3 derived rows vs the baseline
    assert_eq!(report["summaries"].as_array().unwrap().len(), 4);
    assert_eq!(report["derived"].as_array().unwrap().len(), 3);

    // CSV round-trip: derived columns recompute exactly from summary columns
    let csv_path = dir.path().join("report.csv");
    let out = dvfsim(&[
        "compare",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut rows = Vec::new();
    for line in text.lines().skip(2) {
        let cols: Vec<&str> = line.split(',').collect();
        let makespan: f64 = cols[1].parse().unwrap();
        let energy: f64 = cols[2].parse().unwrap();
        let gain: f64 = cols[7].parse().unwrap();
        rows.push((cols[0].to_string(), makespan, energy, gain, cols[8].to_string()));
    }
    let baseline = rows
        .iter()
        .find(|r| r.0 == "reactive_default")
        .expect("baseline row")
        .clone();
    for (policy, makespan, energy, gain, ratio) in &rows {
        if policy == "reactive_default" {
            continue;
        }
        let expect_gain = 100.0 * (baseline.2 - energy) / baseline.2;
        assert_eq!(*gain, expect_gain, "{policy}: gain mismatch");
        if expect_gain > 0.0 {
            let expect_ratio = 100.0 * ((makespan - baseline.1) / baseline.1)
                / ((baseline.2 - energy) / baseline.2);
            let parsed: f64 = ratio.parse().unwrap();
            assert_eq!(parsed, expect_ratio, "{policy}: ratio mismatch");
        }
    }
}

#[test]
fn compare_rejects_unknown_policy() {
    let scenario = fixtures().join("scenarios").join("resnet18.json");
    let out = dvfsim(&[
        "compare",
        "--scenario",
        scenario.to_str().unwrap(),
        "--policy",
        "warp_drive",
        "--baseline",
        "warp_drive",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warp_drive"));
}

#[test]
fn sweep_single_value_yields_one_row() {
    let scenario = fixtures().join("scenarios").join("resnet18.json");
    let out = dvfsim(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--n",
        "5",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let data_rows: Vec<&str> = text.lines().skip(2).filter(|l| !l.is_empty()).collect();
    assert_eq!(data_rows.len(), 1);
}

#[test]
fn sweep_rejects_non_positive_n() {
    let scenario = fixtures().join("scenarios").join("resnet18.json");
    let out = dvfsim(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--n",
        "0",
    ]);
    assert!(!out.status.success());
}

#[test]
fn sweep_resnet101_block_counts_non_increasing() {
    let scenario = fixtures().join("scenarios").join("resnet101.json");
    let out = dvfsim(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--n",
        "1,2,5,10",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let counts: Vec<usize> = text
        .lines()
        .skip(2)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(counts.len(), 4);
    assert!(counts.windows(2).all(|w| w[0] >= w[1]), "counts: {counts:?}");
}

#[test]
fn sweep_accepts_infinity_sentinel() {
    let scenario = fixtures().join("scenarios").join("resnet18.json");
    let out = dvfsim(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--n",
        "inf",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().nth(2).expect("one data row");
    assert!(row.starts_with("inf,1,"), "row: {row}");
}

#[test]
fn validate_files_and_random_self_check() {
    let out = dvfsim(&[
        "validate",
        "--graph",
        fixtures().join("resnet18.json").to_str().unwrap(),
        "--profile",
        fixtures().join("orin_nano.json").to_str().unwrap(),
        "--scenario",
        fixtures().join("scenarios").join("resnet18.json").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("graph ok"));
    assert!(text.contains("profile ok"));
    assert!(text.contains("scenario ok"));

    let out = dvfsim(&["validate", "--random", "25", "--seed", "7"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("self-check ok"));
}

#[test]
fn validate_rejects_malformed_graph() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"name":"bad","operators":[{"id":"a","w_comp":1,"d_mem":1,"s_comp":0}],"edges":[["a","zz"]]}"#,
    )
    .unwrap();
    let out = dvfsim(&["validate", "--graph", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("zz"));
}

/// Output files appear atomically: no temp leftovers next to them.
#[test]
fn no_temp_files_left_behind(){
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    let scenario = fixtures().join("scenarios").join("resnet18.json");
    let out = dvfsim(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--n",
        "5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, vec!["x.csv".to_string()]);
    assert!(Path::new(&out_path).exists());
}
