//! The `voltcast` command line: ingest, diagnose, select, fit, forecast,
//! backtest, and simulate.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::arima::{self, ArimaFitOptions, ArimaOrder, Criterion};
use crate::error::{Error, Result};
use crate::garch::GarchOrder;
use crate::ingest::{self, CleaningPolicy, CsvSchema, DuplicatePolicy, IngestSidecar};
use crate::innovation::DistFamily;
use crate::memforecast::{self, ExperimentConfig, MemConfig, MemModel, Scoring};
use crate::series::{self, AggregationMode, MonthlySeries, TransformStep, YearMonth};
use crate::stattests::{self, AdfLags, AdfRegression};
use crate::synth::{self, SynthConfig};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "voltcast",
    version,
    about = "Long-term electric load forecasting with ARIMA-GARCH"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, clean and aggregate hourly load into a monthly series.
    Ingest(IngestArgs),
    /// Summary statistics, correlograms, ADF and Jarque-Bera tests.
    Diagnose(DiagnoseArgs),
    /// Rank ARIMA orders by AIC or BIC.
    Select(SelectArgs),
    /// Fit the ARIMA-GARCH model and save it as JSON.
    Fit(FitArgs),
    /// Forecast from a saved model.
    Forecast(ForecastArgs),
    /// Fit on a training split and score forecasts on the rest.
    Backtest(BacktestArgs),
    /// Write a synthetic hourly load file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Raw,
    Log,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Duplicates {
    First,
    Average,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "peak")]
    pub mode: AggregationMode,
    #[arg(long, default_value = "timestamp")]
    pub ts_col: String,
    #[arg(long, default_value = "load_mw")]
    pub load_col: String,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long, default_value = "UTC")]
    pub timezone: String,
    #[arg(long, value_enum, default_value = "first")]
    pub duplicates: Duplicates,
    /// Longest run of missing hours to interpolate.
    #[arg(long, default_value_t = 6)]
    pub max_gap: i64,
    #[arg(long)]
    pub allow_long_gaps: bool,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 24)]
    pub max_lag: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub train_end: Option<YearMonth>,
    #[arg(long, default_value_t = 3)]
    pub max_p: usize,
    #[arg(long, default_value_t = 1)]
    pub max_d: usize,
    #[arg(long, default_value_t = 3)]
    pub max_q: usize,
    #[arg(long, default_value = "aic")]
    pub criterion: Criterion,
    #[arg(long, value_enum, default_value = "raw")]
    pub transform: Transform,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value = "1,1,1")]
    pub arima: ArimaOrder,
    #[arg(long, default_value = "1,1")]
    pub garch: GarchOrder,
    #[arg(long, default_value = "normal")]
    pub dist: DistFamily,
    /// Fit on raw levels or on their logarithm.
    #[arg(long, value_enum, default_value = "raw")]
    pub transform: Transform,
    /// Echoed in reports; fitting itself is deterministic.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Last training month; later months are ignored.
    #[arg(long)]
    pub train_end: Option<YearMonth>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Report JSON; the forecast series goes next to it as CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub split: YearMonth,
    /// Score only the first N test months.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub direction_only: bool,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1993)]
    pub start_year: i32,
    #[arg(long, default_value_t = 24)]
    pub years: u32,
    #[arg(long)]
    pub no_slump: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

/// Saved model: the unit of exchange between `fit` and `forecast`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub meta: serde_json::Value,
    pub transform: Transform,
    pub split: Option<YearMonth>,
    pub model: MemModel,
}

impl ModelDocument {
    pub fn new(model: MemModel, split: Option<YearMonth>, seed: u64) -> Self {
        let transform = if model.is_log() { Transform::Log } else { Transform::Raw };
        Self {
            format_version: MODEL_FORMAT_VERSION,
            meta: meta(seed),
            transform,
            split,
            model,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let doc: Self = serde_json::from_reader(BufReader::new(open(path)?))?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::data(format!(
                "{}: model format {} is not supported (expected {MODEL_FORMAT_VERSION})",
                path.display(),
                doc.format_version
            )));
        }
        Ok(doc)
    }
}

fn meta(seed: u64) -> serde_json::Value {
    json!({ "tool": "voltcast", "version": env!("CARGO_PKG_VERSION"), "seed": seed })
}

/// Exit status for an error: 2 usage, 3 data, 4 convergence.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::InvalidArgument(_) => 2,
        Error::Convergence { .. } => 4,
        _ => 3,
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_monthly(path: &Path) -> Result<MonthlySeries> {
    ingest::read_monthly_csv(BufReader::new(open(path)?))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

fn apply_transform(series: &MonthlySeries, t: Transform) -> Result<MonthlySeries> {
    match t {
        Transform::Raw => Ok(series.clone()),
        Transform::Log => series::log_transform(series),
    }
}

fn training_part(series: &MonthlySeries, train_end: Option<YearMonth>) -> Result<MonthlySeries> {
    match train_end {
        None => Ok(series.clone()),
        Some(end) if end == series.end() => Ok(series.clone()),
        Some(end) => Ok(series::split_train_test(series, end)?.train),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Diagnose(a) => cmd_diagnose(&a),
        Command::Select(a) => cmd_select(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Forecast(a) => cmd_forecast(&a),
        Command::Backtest(a) => cmd_backtest(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    }
}

pub fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    if !a.delimiter.is_ascii() {
        return Err(Error::invalid("delimiter must be a single ASCII character"));
    }
    let schema = CsvSchema {
        timestamp_column: a.ts_col.clone(),
        load_column: a.load_col.clone(),
        delimiter: a.delimiter as u8,
        timezone: a.timezone.clone(),
    };
    let (hourly, parse) = ingest::parse_hourly_csv(BufReader::new(open(&a.input)?), &schema)?;
    let policy = CleaningPolicy {
        duplicates: match a.duplicates {
            Duplicates::First => DuplicatePolicy::KeepFirst,
            Duplicates::Average => DuplicatePolicy::Average,
        },
        max_gap_hours: a.max_gap,
        allow_long_gaps: a.allow_long_gaps,
    };
    let (clean, cleaning) = ingest::clean_series(&hourly, &policy)?;
    let monthly = ingest::aggregate_monthly(&clean, a.mode)?;
    let mut w = create(&a.out)?;
    ingest::write_monthly_csv(&monthly, &mut w)?;
    w.flush()?;
    let sidecar = IngestSidecar {
        aggregation_mode: a.mode,
        timezone: a.timezone.clone(),
        months: monthly.len(),
        start: monthly.start(),
        end: monthly.end(),
        parse,
        cleaning_policy: policy,
        cleaning,
    };
    write_json(&sibling(&a.out, ".meta.json"), &sidecar)?;
    println!(
        "{} months {}..{} ({} mode); {} rows read, {} rejected; {} duplicates resolved, {} hours interpolated, {} gaps open",
        monthly.len(),
        monthly.start(),
        monthly.end(),
        a.mode,
        sidecar.parse.rows_read,
        sidecar.parse.rows_rejected.len(),
        sidecar.cleaning.duplicates_resolved(),
        sidecar.cleaning.interpolated(),
        sidecar.cleaning.open_gaps()
    );
    Ok(())
}

pub fn cmd_diagnose(a: &DiagnoseArgs) -> Result<()> {
    let raw = read_monthly(&a.input)?;
    let diff = series::difference(&raw, 1)?;
    let log = series::log_transform(&raw)?;
    let summary = json!({
        "raw": series::describe(raw.values())?,
        "diff": series::describe(diff.values())?,
        "log": series::describe(log.values())?,
    });
    let acf = series::acf(raw.values(), a.max_lag)?;
    let pacf = series::pacf(raw.values(), a.max_lag)?;
    let diff_lag = a.max_lag.min(diff.len() - 1);
    let acf_diff = series::acf(diff.values(), diff_lag)?;
    let pacf_diff = series::pacf(diff.values(), diff_lag)?;
    let adf_raw = stattests::adf_test(raw.values(), AdfLags::Schwert, AdfRegression::Constant, a.alpha)?;
    let adf_diff = stattests::adf_test(diff.values(), AdfLags::Schwert, AdfRegression::Constant, a.alpha)?;
    let jb = stattests::jarque_bera(diff.values(), a.alpha)?;
    let report = json!({
        "input": a.input.display().to_string(),
        "months": raw.len(),
        "start": raw.start(),
        "end": raw.end(),
        "summary": summary,
        "acf": acf,
        "pacf": pacf,
        "acf_diff": acf_diff,
        "pacf_diff": pacf_diff,
        "tests": [adf_raw.clone(), adf_diff.clone(), jb.clone()],
    });
    println!("{} months {}..{}", raw.len(), raw.start(), raw.end());
    println!(
        "{:<6} {:>12} {:>12} {:>12} {:>12} {:>12} {:>9} {:>9}",
        "", "mean", "max", "min", "median", "std", "skew", "kurt"
    );
    for (label, s) in [("raw", &raw), ("diff", &diff), ("log", &log)] {
        let d = series::describe(s.values())?;
        println!(
            "{label:<6} {:>12.3} {:>12.3} {:>12.3} {:>12.3} {:>12.3} {:>9.4} {:>9.4}",
            d.mean, d.max, d.min, d.median, d.std_dev, d.skewness, d.kurtosis
        );
    }
    println!(
        "lag {:>8} {:>8} {:>8} {:>8}  (bound {:.3})",
        "acf", "pacf", "acf_d", "pacf_d", acf[1].confidence_bound
    );
    for k in 0..=a.max_lag {
        let d = |v: &[series::CorrelogramPoint]| v.get(k).map_or(String::from("-"), |p| format!("{:.3}", p.value));
        println!(
            "{k:>3} {:>8} {:>8} {:>8} {:>8}",
            d(&acf),
            d(&pacf),
            d(&acf_diff),
            d(&pacf_diff)
        );
    }
    println!("ADF raw:  {adf_raw}");
    println!("ADF diff: {adf_diff}");
    println!("JB diff:  {jb}");
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    Ok(())
}

pub fn cmd_select(a: &SelectArgs) -> Result<()> {
    let series = apply_transform(&training_part(&read_monthly(&a.input)?, a.train_end)?, a.transform)?;
    let sel = arima::select_order(
        &series,
        a.max_p,
        a.max_d,
        a.max_q,
        a.criterion,
        &ArimaFitOptions::default(),
    )?;
    println!(
        "{:<10} {:>3} {:>14} {:>12} {:>12}",
        "order", "k", "loglik", "aic", "bic"
    );
    for c in &sel.ranked {
        println!(
            "{:<10} {:>3} {:>14.3} {:>12.3} {:>12.3}",
            c.order.to_string(),
            c.k,
            c.loglik,
            c.aic,
            c.bic
        );
    }
    for (order, why) in &sel.failed {
        println!("{order}: failed: {why}");
    }
    println!("best by {:?}: ARIMA{}", sel.criterion, sel.best);
    if let Some(out) = &a.out {
        write_json(out, &sel)?;
    }
    Ok(())
}

fn mem_config(m: &ModelArgs) -> MemConfig {
    MemConfig {
        arima_order: m.arima,
        garch_order: m.garch,
        dist: m.dist,
        ..MemConfig::default()
    }
}

pub fn cmd_fit(a: &FitArgs) -> Result<()> {
    let raw = read_monthly(&a.input)?;
    let train = training_part(&raw, a.train_end)?;
    let working = apply_transform(&train, a.model.transform)?;
    let model = memforecast::fit_mem(&working, &mem_config(&a.model))?;
    print_parameters(&memforecast::parameter_table(&model)?);
    println!(
        "ARIMA{} loglik {:.3}; GARCH{} loglik {:.3} persistence {:.4}",
        model.arima.order,
        model.arima.loglik,
        model.garch.order(),
        model.garch.loglik,
        model.garch.params.persistence()
    );
    write_json(&a.out, &ModelDocument::new(model, Some(train.end()), a.model.seed))
}

pub fn cmd_forecast(a: &ForecastArgs) -> Result<()> {
    let doc = ModelDocument::read(&a.model)?;
    let expected = match doc.transform {
        Transform::Raw => vec![],
        Transform::Log => vec![TransformStep::Log],
    };
    if doc.model.arima.transform != expected {
        return Err(Error::data("model transform field disagrees with its ARIMA lineage"));
    }
    let fc = memforecast::forecast_mem(&doc.model, a.horizon, a.alpha)?;
    let mut w = csv::Writer::from_writer(create(&a.out)?);
    w.write_record(["month", "point", "lower", "upper"])?;
    for i in 0..fc.horizon() {
        w.write_record([
            fc.months[i].to_string(),
            fc.point[i].to_string(),
            fc.lower[i].to_string(),
            fc.upper[i].to_string(),
        ])?;
    }
    w.flush()?;
    println!(
        "{} months {}..{} at {:.0}% confidence",
        fc.horizon(),
        fc.months[0],
        fc.months[fc.horizon() - 1],
        100.0 * fc.confidence
    );
    Ok(())
}

pub fn cmd_backtest(a: &BacktestArgs) -> Result<()> {
    let raw = read_monthly(&a.input)?;
    let mut split = series::split_train_test(&raw, a.split)?;
    if let Some(h) = a.horizon {
        if h == 0 || h > split.test.len() {
            return Err(Error::invalid(format!(
                "horizon {h} outside 1..={} test months",
                split.test.len()
            )));
        }
        split.test = split.test.slice(0, h)?;
    }
    let config = ExperimentConfig {
        name: format!("backtest {}", a.split),
        arima_order: a.model.arima,
        garch_order: a.model.garch,
        dist: a.model.dist,
        log: a.model.transform == Transform::Log,
        alpha: a.alpha,
        scoring: if a.direction_only {
            Scoring::DirectionOnly
        } else {
            Scoring::Full
        },
    };
    let report = memforecast::run_experiment(&split, &config)?;
    let m = &report.metrics;
    println!(
        "train {}..{} ({} months); test {} months",
        report.train_start, report.train_end, report.train_len, m.n
    );
    match config.scoring {
        Scoring::Full => println!(
            "MAPE {:.3}%  MAE {:.3}  DA {:.3}  CI coverage {:.3}",
            m.mape, m.mae, m.directional_accuracy, report.ci_coverage
        ),
        Scoring::DirectionOnly => println!(
            "DA {:.3}  (MAPE {:.3}%, MAE {:.3}, CI coverage {:.3} not scored)",
            m.directional_accuracy, m.mape, m.mae, report.ci_coverage
        ),
    }
    print_parameters(&report.parameters);
    let series_path = sibling(&a.out, ".series.csv");
    report.write_series_csv(create(&series_path)?)?;
    let doc = json!({ "meta": meta(a.model.seed), "series_csv": series_path.file_name().map(|n| n.to_string_lossy().into_owned()), "report": report });
    write_json(&a.out, &doc)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut config = SynthConfig {
        start_year: a.start_year,
        years: a.years,
        seed: a.seed,
        ..SynthConfig::default()
    };
    if a.no_slump {
        config.slump = None;
    }
    let hourly = synth::synthetic_hourly(&config)?;
    let mut w = create(&a.out)?;
    ingest::write_hourly_csv(&hourly, &mut w, &CsvSchema::default())?;
    w.flush()?;
    println!("{} hourly rows written (seed {})", hourly.len(), a.seed);
    Ok(())
}

fn print_parameters(rows: &[memforecast::ParamStat]) {
    println!("{:<16} {:>14} {:>12} {:>10}", "parameter", "estimate", "std.err", "t");
    for r in rows {
        let se = r.stderr.map_or("-".to_string(), |s| format!("{s:.6}"));
        let t = r.t_statistic.map_or("-".to_string(), |t| format!("{t:.4}"));
        let star = if r.significant { " *" } else { "" };
        println!("{:<16} {:>14.6} {:>12} {:>10}{star}", r.name, r.estimate, se, t);
    }
}
