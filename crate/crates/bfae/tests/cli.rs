use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bfae::io::{grid_path, load_csv};
use bfae::modelfile::load_model;
use bfae::report::{ExperimentReport, MEAN};

fn bfae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bfae")).args(args).output().unwrap()
}

fn printed_paths(out: &Output) -> Vec<PathBuf> {
    String::from_utf8(out.stdout.clone()).unwrap().lines().map(PathBuf::from).collect()
}

fn ok(out: Output) -> Vec<PathBuf> {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let paths = printed_paths(&out);
    assert!(!paths.is_empty());
    assert!(paths.iter().all(|p| p.exists()), "{paths:?}");
    paths
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_loadable_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let paths = ok(bfae(&["simulate", "--out", s(&out), "--set", "sim.n_samples=[20,30]", "--set", "sim.n_points=12"]));
    let csvs: Vec<_> = paths.iter().filter(|p| p.extension().unwrap() == "csv").collect();
    assert_eq!(csvs.len(), 2);
    assert!(csvs[0].ends_with("sim1_N20_M12_R1.csv"));
    assert!(grid_path(csvs[0]).exists());
    let d = load_csv(csvs[1]).unwrap();
    assert_eq!(d.values.shape(), (30, 1, 12));
}

#[test]
fn train_history_has_one_row_per_epoch_and_model_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("train");
    ok(bfae(&["train", "--out", s(&out), "--set", "bfae.epochs=25", "--set", "sim.n_points=10", "--seed", "3"]));
    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines[0], "epoch,train_loss,validation_loss");
    assert_eq!(lines.len(), 26);
    assert!(lines[25].starts_with("25,"));
    let (model, header) = load_model(&out.join("model.json")).unwrap();
    assert_eq!(header.epochs_trained, 25);
    assert_eq!(header.seed, header.config.seed);
    assert_eq!(model.data_grid().len(), 10);
}

#[test]
fn benchmark_reports_means_of_replications() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let paths = ok(bfae(&[
        "benchmark", "--out", s(&out), "--jobs", "2",
        "--set", "replications=3", "--set", "bfae.epochs=20", "--set", "sim.n_samples=30", "--set", "sim.n_points=10",
    ]));
    for name in ["report.csv", "report.json", "config.json", "table.csv", "figure2.csv"] {
        assert!(paths.iter().any(|p| p.ends_with(name)), "{name} missing");
    }
    let json = std::fs::read_to_string(out.join("report.json")).unwrap();
    let rep: ExperimentReport = serde_json::from_str(&json).unwrap();
    for mean in rep.summaries() {
        let vals: Vec<f64> = rep
            .replication_rows()
            .filter(|r| r.method == mean.method && r.split == mean.split && r.metric == mean.metric)
            .map(|r| r.value)
            .collect();
        assert_eq!(vals.len(), 3);
        assert!((vals.iter().sum::<f64>() / 3.0 - mean.value).abs() < 1e-15);
        assert_eq!(mean.replication, MEAN);
    }
    let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "method,N=30 M=10");
    assert_eq!(table.lines().count(), 6);
    let fig = std::fs::read_to_string(out.join("figure2.csv")).unwrap();
    assert_eq!(fig.lines().next().unwrap(), "t,truth,pca,ae,fpca,bfae,bfae_m");
    assert_eq!(fig.lines().count(), 11);
}

#[test]
fn realdata_runs_on_files_written_by_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(bfae(&["simulate", "--out", s(&data), "--set", "kind=adelaide", "--set", "data.n_samples=60"]));
    let out = dir.path().join("real");
    let temp = data.join("adelaide_temperature.csv");
    let demand = data.join("adelaide_demand.csv");
    ok(bfae(&[
        "realdata", "--out", s(&out),
        "--set", "kind=adelaide", "--set", "data.synthetic=false",
        "--set", &format!("data.inputs={}", s(&temp)),
        "--set", &format!("data.responses={}", s(&demand)),
        "--set", "bfae.epochs=5", "--set", "methods.ae=false",
    ]));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.contains("original,adelaide,60,48,7,"));
    assert!(csv.contains(",response_rmse,"));
    assert!(csv.contains("bfae_m,adelaide,60,48,7,12,4,"));
    let t4 = std::fs::read_to_string(out.join("table4.csv")).unwrap();
    assert!(t4.starts_with("split,original,bfae,bfae_m\n"));
}

#[test]
fn missing_real_data_fails_with_instructions() {
    let dir = tempfile::tempdir().unwrap();
    let out = bfae(&["realdata", "--out", s(dir.path()), "--set", "kind=phoneme", "--set", "data.synthetic=false"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("data.inputs") && err.contains("sample_id,feature,label"), "{err}");
}

#[test]
fn bad_configuration_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["bfae.nonsense=1", "replications=0", "kind=sim7"] {
        let out = bfae(&["benchmark", "--out", s(dir.path()), "--set", bad]);
        assert!(!out.status.success(), "{bad} accepted");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    let out = bfae(&["realdata", "--out", s(dir.path())]);
    assert!(!out.status.success(), "simulation kinds must use benchmark");
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"kind":"sim1","sim":{"n_samples":25,"n_points":8},"bfae":{"epochs":3}}"#).unwrap();
    let out = dir.path().join("o");
    ok(bfae(&["benchmark", "--config", s(&cfg), "--out", s(&out), "--set", "replications=1", "--seed", "9"]));
    let resolved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(resolved["seed"], 9);
    assert_eq!(resolved["bfae"]["epochs"], 3);
    assert_eq!(resolved["sim"]["n_points"], serde_json::json!([8]));
}
