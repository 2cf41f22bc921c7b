//! End-to-end runs of the `voltcast` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn voltcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voltcast"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = voltcast(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

/// Synthetic hourly file and its monthly peaks, 1993-2016.
fn prepared() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let hourly = p(dir.path(), "hourly.csv");
    ok(&["simulate", "--out", &hourly, "--seed", "3"]);
    ok(&[
        "ingest",
        "--input",
        &hourly,
        "--mode",
        "peak",
        "--out",
        &p(dir.path(), "monthly.csv"),
    ]);
    let monthly = dir.path().join("monthly.csv");
    (dir, monthly)
}

#[test]
fn ingest_writes_288_months_and_sidecar() {
    let (dir, monthly) = prepared();
    let text = std::fs::read_to_string(&monthly).unwrap();
    assert_eq!(text.lines().count(), 1 + 288);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("monthly.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["months"], 288);
    assert_eq!(meta["aggregation_mode"], "peak");

    ok(&[
        "ingest",
        "--input",
        &p(dir.path(), "hourly.csv"),
        "--mode",
        "sum",
        "--out",
        &p(dir.path(), "sum.csv"),
    ]);
    assert_ne!(text, std::fs::read_to_string(dir.path().join("sum.csv")).unwrap());
}

#[test]
fn missing_input_is_a_data_error() {
    let out = voltcast(&["ingest", "--input", "/nonexistent/hourly.csv", "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonexistent"));
}

#[test]
fn bad_flag_is_a_usage_error() {
    assert_eq!(voltcast(&["fit", "--arima", "1,1"]).status.code(), Some(2));
    assert_eq!(voltcast(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn diagnose_reports_requested_lags() {
    let (dir, monthly) = prepared();
    let report = p(dir.path(), "diag.json");
    ok(&[
        "diagnose",
        "--input",
        monthly.to_str().unwrap(),
        "--max-lag",
        "24",
        "--out",
        &report,
    ]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["acf"].as_array().unwrap().len(), 25);
    assert_eq!(v["pacf"].as_array().unwrap().len(), 25);
    assert_eq!(v["tests"].as_array().unwrap().len(), 3);
}

#[test]
fn diagnose_constant_series_fails() {
    let dir = TempDir::new().unwrap();
    let path = p(dir.path(), "flat.csv");
    let mut text = String::from("year,month,value\n");
    for i in 0..60 {
        text.push_str(&format!("{},{},100\n", 2000 + i / 12, i % 12 + 1));
    }
    std::fs::write(&path, text).unwrap();
    let out = voltcast(&["diagnose", "--input", &path]);
    assert!(!out.status.success());
}

#[test]
fn fit_forecast_backtest_pipeline() {
    let (dir, monthly) = prepared();
    let monthly = monthly.to_str().unwrap();
    let model = p(dir.path(), "model.json");
    ok(&[
        "fit",
        "--input",
        monthly,
        "--train-end",
        "2015-12",
        "--arima",
        "1,1,1",
        "--garch",
        "1,1",
        "--dist",
        "normal",
        "--out",
        &model,
    ]);
    let first = std::fs::read(&model).unwrap();
    ok(&[
        "fit",
        "--input",
        monthly,
        "--train-end",
        "2015-12",
        "--arima",
        "1,1,1",
        "--garch",
        "1,1",
        "--dist",
        "normal",
        "--out",
        &model,
    ]);
    assert_eq!(first, std::fs::read(&model).unwrap(), "fit is not deterministic");

    let fc = p(dir.path(), "forecast.csv");
    ok(&[
        "forecast",
        "--model",
        &model,
        "--horizon",
        "12",
        "--alpha",
        "0.05",
        "--out",
        &fc,
    ]);
    let mut rdr = csv::Reader::from_path(&fc).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["month", "point", "lower", "upper"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12);
    assert_eq!(&rows[0][0], "2016-01");

    let bt = p(dir.path(), "backtest.json");
    ok(&[
        "backtest", "--input", monthly, "--split", "2015-12", "--arima", "1,1,1", "--garch", "1,1", "--out", &bt,
    ]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&bt).unwrap()).unwrap();
    assert_eq!(report["meta"]["seed"], 42);
    let mape = report["report"]["metrics"]["mape"].as_f64().unwrap();

    // the emitted series alone reproduces the headline metrics
    let mut rdr = csv::Reader::from_path(dir.path().join("backtest.series.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let prior: f64 = rows[0][1].parse().unwrap();
    let actual: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    let forecast: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    let m = voltcast::memforecast::evaluate(&actual, &forecast, prior).unwrap();
    assert_eq!(m.mape, mape);
    assert_eq!(
        m.directional_accuracy,
        report["report"]["metrics"]["directional_accuracy"].as_f64().unwrap()
    );

    let rerun = dir.path().join("rerun");
    std::fs::create_dir(&rerun).unwrap();
    let again = p(&rerun, "backtest.json");
    ok(&[
        "backtest", "--input", monthly, "--split", "2015-12", "--arima", "1,1,1", "--garch", "1,1", "--out", &again,
    ]);
    assert!(
        std::fs::read(&bt).unwrap() == std::fs::read(&again).unwrap(),
        "backtest JSON differs between runs"
    );
    assert!(
        std::fs::read(dir.path().join("backtest.series.csv")).unwrap()
            == std::fs::read(rerun.join("backtest.series.csv")).unwrap(),
        "backtest CSV differs between runs"
    );
}

#[test]
fn select_ranks_orders() {
    let (dir, monthly) = prepared();
    let out = p(dir.path(), "select.json");
    ok(&[
        "select",
        "--input",
        monthly.to_str().unwrap(),
        "--max-p",
        "1",
        "--max-d",
        "1",
        "--max-q",
        "1",
        "--criterion",
        "bic",
        "--out",
        &out,
    ]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["criterion"], "bic");
    assert!(!v["ranked"].as_array().unwrap().is_empty());
}

#[test]
fn backtest_split_at_last_month_is_usage_error() {
    let (_dir, monthly) = prepared();
    let out = voltcast(&[
        "backtest",
        "--input",
        monthly.to_str().unwrap(),
        "--split",
        "2016-12",
        "--out",
        "/tmp/never.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
