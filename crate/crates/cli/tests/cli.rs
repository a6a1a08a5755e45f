use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use switchopt_cli::checks::insertion_gradient_error;
use switchopt_cli::{load_config, parse_config, run_checks, run_pipeline, CheckOptions, ConfigError};
use switchopt::{Grid, ModeControls};

fn small_config() -> switchopt_cli::RunConfig {
    parse_config(r#"{"grid_nodes": 101}"#).unwrap()
}

#[test]
fn parse_errors_report_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"tf\": 10,\n  \"b_aux\": ,\n}\n").unwrap();
    match load_config(&path) {
        Err(ConfigError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 12)),
        other => panic!("{other:?}"),
    }
    assert!(matches!(load_config(&dir.path().join("missing.json")), Err(ConfigError::Io { .. })));
}

#[test]
fn unknown_keys_and_bad_values_are_rejected() {
    assert!(matches!(parse_config(r#"{"dwell": 0.1}"#), Err(ConfigError::Parse { .. })));
    assert!(matches!(parse_config(r#"{"solver": {"tolerance": 1}}"#), Err(ConfigError::Parse { .. })));
    match parse_config(r#"{"dwell_time": -1}"#) {
        Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "dwell_time"),
        other => panic!("{other:?}"),
    }
    match parse_config(r#"{"tf": 0}"#) {
        Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "tf"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn benchmark_config_mirrors_the_parameters() {
    let c = parse_config(r#"{"problem": {"builtin": {"name": "mass_spring_damper"}}}"#).unwrap();
    assert_eq!(c.tf(), 10.0);
    assert_eq!((c.cost_coeff, c.b_aux, c.dwell_time), (4.0, 1.0, 0.1));
    let switchopt_cli::config::ProblemSpec::Builtin(spec) = &c.problem else { panic!() };
    assert_eq!((spec.mass, spec.spring, spec.b_damper, spec.force), (1.0, 0.1, 0.1, 0.2));
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn pipeline_writes_deterministic_artifacts() {
    let config = small_config();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let report = run_pipeline(&config, a.path()).unwrap();
    run_pipeline(&config, b.path()).unwrap();
    let files = read_dir_sorted(a.path());
    assert_eq!(files, read_dir_sorted(b.path()));

    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    for expected in [
        "report.json", "v_embedded.csv", "x_embedded.csv", "v_filtered_T0.csv", "v_filtered_T0.1.csv",
        "v_filtered_T0.2.csv", "x_T0.1.csv", "cost_T0.2.csv",
    ] {
        assert!(names.contains(&expected), "missing {expected}");
    }
    for (name, bytes) in &files {
        assert!(!bytes.contains(&b'\r'), "{name} has CR");
    }
    let cost = fs::read_to_string(a.path().join("cost_T0.1.csv")).unwrap();
    assert_eq!(cost.lines().next(), Some("t,L,J"));

    for stage in &report.stages {
        if stage.dwell_time > 0.0 {
            assert!(stage.min_gap.is_none_or(|g| g >= stage.dwell_time));
        } else {
            assert_eq!(stage.schedule, report.solver.schedule);
        }
    }
    let json: Value = serde_json::from_slice(&fs::read(a.path().join("report.json")).unwrap()).unwrap();
    let stages = json["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 3);
    for s in stages {
        for key in ["input_cost", "filtered_cost", "min_gap", "switch_count"] {
            assert!(s.get(key).is_some(), "missing {key}");
        }
    }
    assert!(stages[1]["filter"]["steps"][0]["scores"].is_array());
}

#[test]
fn unfiltered_stage_is_the_rounded_embedded_signal() {
    let config = small_config();
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&config, dir.path()).unwrap();
    let read = |name: &str| -> Vec<(f64, f64)> {
        fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| {
                let (t, v) = l.split_once(',').unwrap();
                (t.parse().unwrap(), v.parse().unwrap())
            })
            .collect()
    };
    let embedded = read("v_embedded.csv");
    let filtered = read("v_filtered_T0.csv");
    for (t, v) in embedded {
        // Nodes of the embedded grid are nodes of the filtered grid too.
        let (_, w) = filtered.iter().find(|(s, _)| *s == t).unwrap();
        assert_eq!(*w, if v > 0.5 { 1.0 } else { 0.0 }, "t = {t}");
    }
}

#[test]
fn corrupted_costate_is_caught() {
    let config = small_config();
    let problem = config.build_problem().unwrap();
    let controls = ModeControls::midpoint(&problem);
    let grid = Grid::uniform(0.0, 10.0, 501).unwrap();
    let clean = insertion_gradient_error(&problem, &controls, &grid, &CheckOptions::default()).unwrap();
    assert!(clean <= 0.05);
    let faulty = CheckOptions { costate_offset: 1.0, ..CheckOptions::default() };
    let corrupted = insertion_gradient_error(&problem, &controls, &grid, &faulty).unwrap();
    assert!(corrupted > 0.05);

    let report = run_checks(&config, &faulty).unwrap();
    assert!(!report.rows[0].passed);
    assert!(!report.passed());
}

#[test]
fn dwell_beyond_the_horizon_still_checks() {
    let config = parse_config(r#"{"grid_nodes": 101, "dwell_time": 20}"#).unwrap();
    let report = run_checks(&config, &CheckOptions::default()).unwrap();
    let gap = report.rows.iter().find(|r| r.name == "filtered min gap").unwrap();
    assert!(gap.passed);
    assert!(report.rows[..2].iter().all(|r| r.passed), "{}", report.table());
}

#[test]
fn default_benchmark_checks_pass() {
    let config = parse_config("{}").unwrap();
    let report = run_checks(&config, &CheckOptions::default()).unwrap();
    assert!(report.passed(), "{}", report.table());
}

#[test]
fn binary_reports_the_failing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    fs::write(&path, r#"{"dwell_time": -1}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_switchopt"))
        .args(["filter", "--seed", "7", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().unwrap();
    let json: Value = serde_json::from_str(line).unwrap();
    assert_eq!(json["stage"], "config");
    assert_eq!(json["status"], "error");
}

#[test]
fn binary_solve_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    fs::write(&path, r#"{"grid_nodes": 51, "tf": 5}"#).unwrap();
    let out = dir.path().join("out");
    let run = Command::new(env!("CARGO_BIN_EXE_switchopt"))
        .args(["solve", "--seed", "1", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(String::from_utf8(run.stdout).unwrap().starts_with("objective"));
    let v = fs::read_to_string(out.join("v_embedded.csv")).unwrap();
    assert_eq!(v.lines().count(), 52);
    assert!(out.join("solve.json").exists());
}
