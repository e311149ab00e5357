use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qseis::problem::LayeredProblem;

fn qseis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qseis"))
        .args(args)
        .output()
        .expect("spawn qseis")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn synth_writes_a_loadable_problem() {
    let out = qseis(&["synth", "--layers", "1", "--bits", "2", "--seed", "1"]);
    assert!(out.status.success());
    let p: LayeredProblem = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((p.nlayers(), p.bits()), (1, 2));
    assert_eq!(p.objective_int(p.slowness_true().unwrap()).unwrap(), 0.0);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.json");
    let out = qseis(&[
        "synth",
        "--layers",
        "3",
        "--bits",
        "3",
        "--seed",
        "4",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = qseis(&[
        "evolve",
        "--problem",
        file.to_str().unwrap(),
        "--generations",
        "5",
        "--runs",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("9 qubits"));
}

#[test]
fn missing_problem_file_fails_with_diagnostic() {
    let out = qseis(&["evolve", "--problem", "missing.json"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing.json"), "{err}");
}

#[test]
fn invalid_flags_are_rejected() {
    for args in [
        &["evolve", "--problem", "p.json", "--layers", "3"][..],
        &["evolve", "--layers", "3", "--bits", "3", "--frobnicate"],
        &["evolve"],
        &["evolve", "--layers", "3"],
        &["evolve", "--layers", "2", "--bits", "2", "--mu", "2"],
        &["evolve", "--layers", "2", "--bits", "2", "--lambda", "0"],
    ] {
        let out = qseis(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty(), "{args:?} printed no diagnostic");
    }
}

#[test]
fn evolve_writes_records_and_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = qseis(&[
        "evolve",
        "--layers",
        "1",
        "--bits",
        "2",
        "--generations",
        "300",
        "--runs",
        "3",
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let mut names: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "convergence.csv",
            "histogram.csv",
            "run_000.json",
            "run_001.json",
            "run_002.json"
        ]
    );

    let conv = csv_rows(&out_dir.join("convergence.csv"));
    assert_eq!(
        conv[0],
        [
            "generation",
            "mean_cost",
            "std_cost",
            "run_0",
            "run_1",
            "run_2"
        ]
    );
    assert_eq!(conv.len(), 1 + 7);
    for row in &conv[1..] {
        let v: Vec<f64> = row.iter().map(|c| c.parse().unwrap()).collect();
        let mean = (v[3] + v[4] + v[5]) / 3.0;
        assert!((v[1] - mean).abs() <= 1e-12 * mean.abs().max(1.0));
    }

    let hist = csv_rows(&out_dir.join("histogram.csv"));
    assert_eq!(
        hist[0],
        ["layer", "reference", "mean_decoded", "std_decoded"]
    );
    assert_eq!(hist.len(), 2);

    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("run_000.json")).unwrap()).unwrap();
    assert_eq!(record["costs"].as_array().unwrap().len(), 301);
    assert_eq!(record["snapshots"].as_array().unwrap().len(), 7);
    assert!(record.get("duration").is_none());
}

#[test]
fn vqa_and_compare_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("cmp");
    let out = qseis(&[
        "compare",
        "--layers",
        "2",
        "--bits",
        "2",
        "--generations",
        "20",
        "--runs",
        "2",
        "--seed",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let joined = csv_rows(&out_dir.join("comparison.csv"));
    assert_eq!(
        joined[0],
        [
            "generation",
            "evolution_mean_cost",
            "evolution_std_cost",
            "vqa_mean_cost",
            "vqa_std_cost"
        ]
    );
    assert_eq!(joined.len(), 1 + 2);
    assert!(out_dir.join("evolution/run_001.json").exists());
    assert!(out_dir.join("vqa/convergence.csv").exists());

    let out = qseis(&[
        "vqa",
        "--layers",
        "1",
        "--bits",
        "2",
        "--generations",
        "0",
        "--runs",
        "1",
    ]);
    assert!(out.status.success());
}
