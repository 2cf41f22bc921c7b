//! The assembled multiplicative error model: ARIMA conditional mean with
//! GARCH errors, interval forecasts, and backtest scoring.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arima::{self, ArimaFitOptions, ArimaModel, ArimaOrder, ArmaSpec};
use crate::error::{Error, Result};
use crate::garch::{self, GarchFitOptions, GarchModel, GarchOrder, GarchParams};
use crate::innovation::{DistFamily, InnovationDist};
use crate::series::{self, MonthlySeries, SplitSpec, TransformStep, YearMonth};
use crate::stattests::dist::normal_quantile;

pub const MIN_MEM_OBS: usize = 100;

/// ARIMA mean model plus GARCH model of its residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemModel {
    pub arima: ArimaModel,
    pub garch: GarchModel,
    /// Series the model was fitted on, in fitted units (raw or log).
    pub history: MonthlySeries,
}

impl MemModel {
    /// Pair a mean model with an error model fitted on its residuals.
    pub fn new(arima: ArimaModel, garch: GarchModel, history: MonthlySeries) -> Result<Self> {
        if garch.residuals != arima.residuals {
            return Err(Error::invalid("GARCH model was not fitted on the ARIMA residuals"));
        }
        if history.transform() != arima.transform.as_slice() {
            return Err(Error::invalid("history transform differs from the ARIMA lineage"));
        }
        Ok(Self { arima, garch, history })
    }

    pub fn is_log(&self) -> bool {
        self.arima.transform == [TransformStep::Log]
    }
}

#[derive(Debug, Clone)]
pub struct MemConfig {
    pub arima_order: ArimaOrder,
    pub garch_order: GarchOrder,
    pub dist: DistFamily,
    pub arima: ArimaFitOptions,
    pub garch: GarchFitOptions,
}

impl Default for MemConfig {
    fn default() -> Self {
        Self {
            arima_order: ArimaOrder::new(1, 1, 1),
            garch_order: GarchOrder::new(1, 1),
            dist: DistFamily::Normal,
            arima: ArimaFitOptions::default(),
            garch: GarchFitOptions::default(),
        }
    }
}

/// Two-stage fit: ARIMA on the series, then GARCH on the ARIMA residuals.
pub fn fit_mem(series: &MonthlySeries, config: &MemConfig) -> Result<MemModel> {
    if series.len() < MIN_MEM_OBS {
        return Err(Error::invalid(format!(
            "multiplicative error model needs at least {MIN_MEM_OBS} months, got {}",
            series.len()
        )));
    }
    let arima = arima::fit_arima(series, config.arima_order, &config.arima).map_err(|e| e.in_stage("arima"))?;
    log::debug!("arima{} loglik {:.3}", config.arima_order, arima.loglik);
    let garch = garch::fit_garch(&arima.residuals, config.garch_order, config.dist, &config.garch)
        .map_err(|e| e.in_stage("garch"))?;
    log::debug!("garch{} loglik {:.3}", config.garch_order, garch.loglik);
    MemModel::new(arima, garch, series.clone())
}

/// Interval forecast in level units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub months: Vec<YearMonth>,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// GARCH variance forecasts of the next shocks.
    pub variance_path: Vec<f64>,
    /// Forecast-error variance per step, in fitted units.
    pub error_variance: Vec<f64>,
    /// Nominal coverage of `[lower, upper]`.
    pub confidence: f64,
}

impl ForecastResult {
    pub fn horizon(&self) -> usize {
        self.point.len()
    }
}

/// Forecast `horizon` months with `(1 − alpha)` intervals.
///
/// The step-`k` error variance is `Σ_{j<k} ψ_j² h_{t+k−j}`; bounds are
/// built in fitted units and mapped back (exponentiated for log models).
pub fn forecast_mem(model: &MemModel, horizon: usize, alpha: f64) -> Result<ForecastResult> {
    if horizon < 1 {
        return Err(Error::invalid("forecast horizon must be at least 1"));
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let mean = arima::forecast_mean(&model.arima, horizon, &model.history)?;
    let h = garch::forecast_variance(&model.garch, horizon)?;
    let error_variance: Vec<f64> = (1..=horizon)
        .map(|k| (0..k).map(|j| mean.psi[j] * mean.psi[j] * h[k - 1 - j]).sum())
        .collect();
    let to_level = |v: f64| if model.is_log() { v.exp() } else { v };
    let (lower, upper) = mean
        .working
        .iter()
        .zip(&error_variance)
        .map(|(m, v)| {
            let half = z * v.sqrt();
            (to_level(m - half), to_level(m + half))
        })
        .unzip();
    Ok(ForecastResult {
        months: (0..horizon).map(|k| mean.start.offset(k as i64)).collect(),
        point: mean.point,
        lower,
        upper,
        variance_path: h,
        error_variance,
        confidence: 1.0 - alpha,
    })
}

/// Point-forecast accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    /// Mean absolute percentage error, in percent.
    pub mape: f64,
    /// Mean absolute error, in the series' units.
    pub mae: f64,
    /// Share of steps whose forecast direction (against the previous
    /// actual) matches the realised direction.
    pub directional_accuracy: f64,
}

/// Score `forecasts` against `actuals`; `prior_actual` is the last observed
/// value before the first forecast month.
pub fn evaluate(actuals: &[f64], forecasts: &[f64], prior_actual: f64) -> Result<Metrics> {
    if actuals.len() != forecasts.len() {
        return Err(Error::invalid(format!(
            "{} actuals vs {} forecasts",
            actuals.len(),
            forecasts.len()
        )));
    }
    if actuals.is_empty() {
        return Err(Error::invalid("nothing to evaluate"));
    }
    if let Some(a) = actuals.iter().find(|a| !(**a > 0.0)) {
        return Err(Error::data(format!("MAPE needs positive actuals, found {a}")));
    }
    let n = actuals.len();
    let nf = n as f64;
    let mape = 100.0 / nf
        * actuals
            .iter()
            .zip(forecasts)
            .map(|(a, f)| (a - f).abs() / a)
            .sum::<f64>();
    let mae = actuals.iter().zip(forecasts).map(|(a, f)| (a - f).abs()).sum::<f64>() / nf;
    let sign = |x: f64| {
        if x > 0.0 {
            1
        } else if x < 0.0 {
            -1
        } else {
            0
        }
    };
    let mut previous = prior_actual;
    let mut hits = 0usize;
    for (a, f) in actuals.iter().zip(forecasts) {
        if sign(f - previous) == sign(a - previous) {
            hits += 1;
        }
        previous = *a;
    }
    Ok(Metrics {
        n,
        mape,
        mae,
        directional_accuracy: hits as f64 / nf,
    })
}

/// Share of actuals inside `[lower, upper]`.
pub fn ci_coverage(actuals: &[f64], lower: &[f64], upper: &[f64]) -> Result<f64> {
    if actuals.len() != lower.len() || actuals.len() != upper.len() || actuals.is_empty() {
        return Err(Error::invalid("coverage needs equal, non-empty series"));
    }
    let inside = actuals
        .iter()
        .zip(lower.iter().zip(upper))
        .filter(|(a, (l, u))| *l <= *a && *a <= *u)
        .count();
    Ok(inside as f64 / actuals.len() as f64)
}

/// One row of a parameter table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStat {
    pub name: String,
    pub estimate: f64,
    pub stderr: Option<f64>,
    /// `estimate / stderr`.
    pub t_statistic: Option<f64>,
    /// `|t| > 2`, roughly the 95% level.
    pub significant: bool,
}

impl ParamStat {
    pub fn new(name: impl Into<String>, estimate: f64, stderr: Option<f64>) -> Self {
        let t_statistic = stderr.filter(|s| *s > 0.0).map(|s| estimate / s);
        Self {
            name: name.into(),
            estimate,
            stderr,
            t_statistic,
            significant: t_statistic.is_some_and(|t| t.abs() > 2.0),
        }
    }
}

/// Mean-equation and variance-equation parameters with t-statistics.
/// The ARIMA innovation variance is omitted; the GARCH path replaces it.
pub fn parameter_table(model: &MemModel) -> Result<Vec<ParamStat>> {
    let a = &model.arima;
    let g = &model.garch;
    if a.stderr.iter().all(Option::is_none) && g.stderr.iter().all(Option::is_none) {
        return Err(Error::invalid("model carries no standard errors; fit it first"));
    }
    let mut rows = Vec::new();
    let a_est = a.estimates();
    for ((name, est), se) in a.param_names.iter().zip(&a_est).zip(&a.stderr) {
        if name != "sigma2" {
            rows.push(ParamStat::new(format!("arima.{name}"), *est, *se));
        }
    }
    for ((name, est), se) in g.param_names.iter().zip(g.estimates()).zip(&g.stderr) {
        rows.push(ParamStat::new(format!("garch.{name}"), est, *se));
    }
    Ok(rows)
}

/// What the headline of an experiment is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    Full,
    /// Only the direction of change is scored (recession check).
    DirectionOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub arima_order: ArimaOrder,
    pub garch_order: GarchOrder,
    pub dist: DistFamily,
    /// Fit on logs and map forecasts back.
    pub log: bool,
    pub alpha: f64,
    pub scoring: Scoring,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "backtest".into(),
            arima_order: ArimaOrder::new(1, 1, 1),
            garch_order: GarchOrder::new(1, 1),
            dist: DistFamily::Normal,
            log: false,
            alpha: 0.05,
            scoring: Scoring::Full,
        }
    }
}

/// Forecasts against held-out actuals, with everything needed to
/// recompute the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub config: ExperimentConfig,
    pub train_start: YearMonth,
    pub train_end: YearMonth,
    pub train_len: usize,
    pub prior_actual: f64,
    pub months: Vec<YearMonth>,
    pub actuals: Vec<f64>,
    pub forecasts: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub metrics: Metrics,
    pub ci_coverage: f64,
    pub parameters: Vec<ParamStat>,
}

impl BacktestReport {
    /// `month,actual,forecast,lower,upper`; the first row is the last
    /// training month with only its actual, the baseline for directions.
    pub fn write_series_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["month", "actual", "forecast", "lower", "upper"])?;
        w.write_record([
            self.train_end.to_string(),
            self.prior_actual.to_string(),
            String::new(),
            String::new(),
            String::new(),
        ])?;
        for i in 0..self.months.len() {
            w.write_record([
                self.months[i].to_string(),
                self.actuals[i].to_string(),
                self.forecasts[i].to_string(),
                self.lower[i].to_string(),
                self.upper[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fit on `split.train`, forecast every test month once, and score.
/// `split` must hold untransformed (level) values.
pub fn run_experiment(split: &SplitSpec, config: &ExperimentConfig) -> Result<BacktestReport> {
    if !split.train.is_raw() || !split.test.is_raw() {
        return Err(Error::invalid(
            "experiments take level series; set `log` to fit on logs",
        ));
    }
    let train = if config.log {
        series::log_transform(&split.train)?
    } else {
        split.train.clone()
    };
    let mem_config = MemConfig {
        arima_order: config.arima_order,
        garch_order: config.garch_order,
        dist: config.dist,
        ..MemConfig::default()
    };
    let model = fit_mem(&train, &mem_config)?;
    let fc = forecast_mem(&model, split.test.len(), config.alpha)?;
    let actuals = split.test.values().to_vec();
    let prior_actual = *split.train.values().last().expect("non-empty train");
    let metrics = evaluate(&actuals, &fc.point, prior_actual)?;
    let coverage = ci_coverage(&actuals, &fc.lower, &fc.upper)?;
    let parameters = parameter_table(&model)?;
    Ok(BacktestReport {
        config: config.clone(),
        train_start: split.train.start(),
        train_end: split.train.end(),
        train_len: split.train.len(),
        prior_actual,
        months: fc.months,
        actuals,
        forecasts: fc.point,
        lower: fc.lower,
        upper: fc.upper,
        metrics,
        ci_coverage: coverage,
        parameters,
    })
}

/// A simulated ARMA path driven by GARCH shocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedMem {
    pub values: Vec<f64>,
    pub shocks: Vec<f64>,
    pub variances: Vec<f64>,
}

/// Simulate `x_t − μ = Σφ(x_{t−i} − μ) + Z_t + Σθ Z_{t−j}` with GARCH shocks
/// `Z_t`. `mean.sigma` is ignored.
pub fn simulate_mem(
    mean: &ArmaSpec,
    variance: &GarchParams,
    n: usize,
    seed: u64,
    dist: InnovationDist,
) -> Result<SimulatedMem> {
    if !arima::is_stationary(&mean.ar) || !arima::is_invertible(&mean.ma) {
        return Err(Error::invalid("ARMA part must be stationary and invertible"));
    }
    let burn = 10 * (mean.ar.len() + mean.ma.len() + 1);
    let (z, h) = garch::simulate_garch(variance, n + burn, seed, dist)?;
    let mut dev = vec![0.0; n + burn];
    for t in 0..n + burn {
        let mut v = z[t];
        for (i, phi) in mean.ar.iter().enumerate() {
            if t > i {
                v += phi * dev[t - 1 - i];
            }
        }
        for (j, theta) in mean.ma.iter().enumerate() {
            if t > j {
                v += theta * z[t - 1 - j];
            }
        }
        dev[t] = v;
    }
    Ok(SimulatedMem {
        values: dev[burn..].iter().map(|d| mean.mean + d).collect(),
        shocks: z[burn..].to_vec(),
        variances: h[burn..].to_vec(),
    })
}

/// Seeded RNG used by Monte-Carlo helpers; one stream per replication.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}
