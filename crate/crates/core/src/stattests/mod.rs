//! Hypothesis tests for identification and validation: ADF unit root,
//! Ljung-Box portmanteau and Jarque-Bera normality.

pub mod dist;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::series::{autocorrelations, describe};

pub use dist::{chi_square_survival, normal_quantile};

/// Outcome of a hypothesis test.
///
/// `p_value` is `None` for tests decided against tabulated critical values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub reject: bool,
    pub alpha: f64,
    #[serde(default)]
    pub detail: BTreeMap<String, Value>,
}

impl TestResult {
    fn detail_f64(&self, key: &str) -> Option<f64> {
        self.detail.get(key).and_then(Value::as_f64)
    }

    /// Critical value at `level` (e.g. `"5%"`), for critical-value tests.
    pub fn critical_value(&self, level: &str) -> Option<f64> {
        self.detail_f64(&format!("critical_{level}"))
    }
}

impl fmt::Display for TestResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<14} stat {:>12.4}", self.name, self.statistic)?;
        match self.p_value {
            Some(p) => write!(f, "  p {:>8.4}", p)?,
            None => {
                for lvl in ["1%", "5%", "10%"] {
                    if let Some(cv) = self.critical_value(lvl) {
                        write!(f, "  cv{lvl} {cv:.3}")?;
                    }
                }
            }
        }
        write!(
            f,
            "  alpha {:.2}  {}",
            self.alpha,
            if self.reject { "REJECT" } else { "fail to reject" }
        )
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Deterministic terms of the ADF regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdfRegression {
    #[default]
    Constant,
    ConstantTrend,
}

impl AdfRegression {
    fn label(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::ConstantTrend => "constant+trend",
        }
    }

    /// MacKinnon (2010) response-surface coefficients for the 1%, 5% and
    /// 10% critical values: `cv(T) = b0 + b1/T + b2/T² + b3/T³`.
    fn response_surface(self) -> [[f64; 4]; 3] {
        match self {
            Self::Constant => [
                [-3.43035, -6.5393, -16.786, -79.433],
                [-2.86154, -2.8903, -4.234, -40.040],
                [-2.56677, -1.5384, -2.809, 0.0],
            ],
            Self::ConstantTrend => [
                [-3.95877, -9.0531, -28.428, -134.155],
                [-3.41049, -4.3904, -9.036, -45.374],
                [-3.12705, -2.5856, -3.925, -22.380],
            ],
        }
    }

    /// Critical values at 1%, 5%, 10% for `nobs` regression observations.
    pub fn critical_values(self, nobs: usize) -> [f64; 3] {
        let t = nobs as f64;
        self.response_surface()
            .map(|b| b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t))
    }
}

/// Lag augmentation for the ADF regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "lags")]
pub enum AdfLags {
    /// `⌊12·(n/100)^{1/4}⌋`.
    #[default]
    Schwert,
    Fixed(usize),
    /// Minimise AIC over `0..=max` on a common sample, then refit.
    Aic(usize),
}

pub fn schwert_lags(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

struct OlsFit {
    coef: DVector<f64>,
    stderr: DVector<f64>,
    ssr: f64,
    nobs: usize,
}

fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (m, k) = x.shape();
    if m <= k {
        return Err(Error::invalid(format!("regression with {m} rows and {k} regressors")));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let diag_max = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].abs() <= 1e-12 * diag_max.max(f64::MIN_POSITIVE)) {
        return Err(Error::Numerical("singular regression matrix".into()));
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("singular regression matrix".into()))?;
    let resid = y - x * &coef;
    let ssr = resid.dot(&resid);
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular regression matrix".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let s2 = ssr / (m - k) as f64;
    let stderr = DVector::from_iterator(k, (0..k).map(|i| (s2 * xtx_inv[(i, i)]).sqrt()));
    Ok(OlsFit {
        coef,
        stderr,
        ssr,
        nobs: m,
    })
}

/// ADF design for `lags` augmentation terms, using rows from `first_row` of the differences.
fn adf_design(y: &[f64], lags: usize, first_row: usize, regression: AdfRegression) -> (DMatrix<f64>, DVector<f64>) {
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let rows: Vec<usize> = (first_row..dy.len()).collect();
    let ncols = 2 + usize::from(regression == AdfRegression::ConstantTrend) + lags;
    let mut x = DMatrix::zeros(rows.len(), ncols);
    let mut resp = DVector::zeros(rows.len());
    for (i, &t) in rows.iter().enumerate() {
        resp[i] = dy[t];
        // column 0 is the lagged level so its t-ratio is easy to find
        x[(i, 0)] = y[t];
        x[(i, 1)] = 1.0;
        let mut c = 2;
        if regression == AdfRegression::ConstantTrend {
            x[(i, c)] = (t + 1) as f64;
            c += 1;
        }
        for j in 1..=lags {
            x[(i, c)] = dy[t - j];
            c += 1;
        }
    }
    (x, resp)
}

/// Augmented Dickey-Fuller unit-root test.
///
/// Regresses `Δy_t` on the lagged level, deterministic terms and lagged
/// differences; the statistic is the t-ratio of the lagged level. Rejection
/// (statistic below the critical value) means no unit root.
pub fn adf_test(y: &[f64], lags: AdfLags, regression: AdfRegression, alpha: f64) -> Result<TestResult> {
    let level_idx = match alpha {
        a if (a - 0.01).abs() < 1e-12 => 0,
        a if (a - 0.05).abs() < 1e-12 => 1,
        a if (a - 0.10).abs() < 1e-12 => 2,
        a => {
            return Err(Error::invalid(format!(
                "ADF critical values are tabulated at alpha 0.01, 0.05, 0.10; got {a}"
            )))
        }
    };
    let n = y.len();
    let max_lag = match lags {
        AdfLags::Schwert => schwert_lags(n),
        AdfLags::Fixed(k) | AdfLags::Aic(k) => k,
    };
    if n < 20 + max_lag {
        return Err(Error::invalid(format!(
            "ADF with {max_lag} lags needs at least {} observations, got {n}",
            20 + max_lag
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("ADF input contains non-finite values"));
    }

    let used_lags = match lags {
        AdfLags::Aic(max) => {
            let mut best = (f64::INFINITY, 0);
            for k in 0..=max {
                let (x, resp) = adf_design(y, k, max, regression);
                let fit = ols(&x, &resp)?;
                let m = fit.nobs as f64;
                let llf = -0.5 * m * ((2.0 * std::f64::consts::PI).ln() + (fit.ssr / m).ln() + 1.0);
                let aic = -2.0 * llf + 2.0 * x.ncols() as f64;
                if aic < best.0 {
                    best = (aic, k);
                }
            }
            best.1
        }
        _ => max_lag,
    };

    let (x, resp) = adf_design(y, used_lags, used_lags, regression);
    let fit = ols(&x, &resp)?;
    let statistic = fit.coef[0] / fit.stderr[0];
    let cvs = regression.critical_values(fit.nobs);
    let mut detail = BTreeMap::new();
    detail.insert("lags".into(), Value::from(used_lags));
    detail.insert("nobs".into(), Value::from(fit.nobs));
    detail.insert("regression".into(), Value::from(regression.label()));
    detail.insert("gamma".into(), Value::from(fit.coef[0]));
    for (lvl, cv) in ["1%", "5%", "10%"].iter().zip(cvs) {
        detail.insert(format!("critical_{lvl}"), Value::from(cv));
    }
    Ok(TestResult {
        name: "adf".into(),
        statistic,
        p_value: None,
        reject: statistic < cvs[level_idx],
        alpha,
        detail,
    })
}

/// Ljung-Box Q over lags `1..=lags`, referred to χ² with `lags − fitted_params` df.
pub fn ljung_box(residuals: &[f64], lags: usize, fitted_params: usize, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    if lags <= fitted_params {
        return Err(Error::invalid(format!(
            "Ljung-Box needs more lags ({lags}) than fitted parameters ({fitted_params})"
        )));
    }
    let n = residuals.len();
    if n <= lags {
        return Err(Error::invalid(format!(
            "Ljung-Box with {lags} lags needs more than {lags} values, got {n}"
        )));
    }
    let r = autocorrelations(residuals, lags)?;
    let nf = n as f64;
    let q = nf * (nf + 2.0) * (1..=lags).map(|k| r[k] * r[k] / (nf - k as f64)).sum::<f64>();
    let df = (lags - fitted_params) as u32;
    let p = chi_square_survival(q, df)?;
    let mut detail = BTreeMap::new();
    detail.insert("lags".into(), Value::from(lags));
    detail.insert("df".into(), Value::from(df));
    detail.insert("nobs".into(), Value::from(n));
    Ok(TestResult {
        name: "ljung_box".into(),
        statistic: q,
        p_value: Some(p),
        reject: p < alpha,
        alpha,
        detail,
    })
}

/// JB statistic from sample size, skewness and raw kurtosis.
pub fn jarque_bera_statistic(n: usize, skewness: f64, kurtosis: f64) -> f64 {
    n as f64 / 6.0 * (skewness * skewness + (kurtosis - 3.0).powi(2) / 4.0)
}

/// Jarque-Bera normality test. `detail.h` is 1 when normality is rejected.
pub fn jarque_bera(values: &[f64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    if values.len() < 8 {
        return Err(Error::invalid(format!(
            "Jarque-Bera needs at least 8 values, got {}",
            values.len()
        )));
    }
    let stats = describe(values)?;
    if !(stats.std_dev > 0.0) || !stats.skewness.is_finite() {
        return Err(Error::data("Jarque-Bera undefined for zero-variance data"));
    }
    let jb = jarque_bera_statistic(stats.n, stats.skewness, stats.kurtosis);
    let p = chi_square_survival(jb, 2)?;
    let reject = p < alpha;
    let mut detail = BTreeMap::new();
    detail.insert("skewness".into(), Value::from(stats.skewness));
    detail.insert("kurtosis_raw".into(), Value::from(stats.kurtosis));
    detail.insert("h".into(), Value::from(u8::from(reject)));
    Ok(TestResult {
        name: "jarque_bera".into(),
        statistic: jb,
        p_value: Some(p),
        reject,
        alpha,
        detail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wiggle(n: usize) -> Vec<f64> {
        (0..n)
            .map(|t| ((t * t) as f64 * 0.37).sin() + 0.3 * (t as f64 * 1.3).cos())
            .collect()
    }

    #[test]
    fn critical_values_match_statsmodels_at_196() {
        let cv = AdfRegression::Constant.critical_values(196);
        assert!((cv[0] + 3.464_161_278_384_219).abs() < 1e-12);
        assert!((cv[1] + 2.876_401_960_790_147).abs() < 1e-12);
        assert!((cv[2] + 2.574_692_100_166_597_4).abs() < 1e-12);
        let ct = AdfRegression::ConstantTrend.critical_values(196);
        assert!((ct[0] + 4.005_717_107_046_171).abs() < 1e-12);
        assert!((ct[1] + 3.433_131_240_628_904_3).abs() < 1e-12);
    }

    #[test]
    fn adf_errors() {
        assert!(adf_test(&wiggle(25), AdfLags::Fixed(10), AdfRegression::Constant, 0.05).is_err());
        assert!(adf_test(&[5.0; 60], AdfLags::Fixed(1), AdfRegression::Constant, 0.05).is_err());
        assert!(adf_test(&wiggle(100), AdfLags::Fixed(1), AdfRegression::Constant, 0.2).is_err());
    }

    #[test]
    fn adf_affine_invariance() {
        let y: Vec<f64> = wiggle(300)
            .iter()
            .scan(0.0, |s, e| {
                *s += e;
                Some(*s)
            })
            .collect();
        let a = adf_test(&y, AdfLags::Fixed(4), AdfRegression::Constant, 0.05).unwrap();
        let z: Vec<f64> = y.iter().map(|v| 1234.5 * v + 98765.0).collect();
        let b = adf_test(&z, AdfLags::Fixed(4), AdfRegression::Constant, 0.05).unwrap();
        assert!(
            (a.statistic - b.statistic).abs() < 1e-8,
            "{} {}",
            a.statistic,
            b.statistic
        );
    }

    #[test]
    fn ljung_box_argument_errors() {
        let v = wiggle(50);
        assert!(ljung_box(&v, 2, 2, 0.05).is_err());
        assert!(ljung_box(&v, 50, 0, 0.05).is_err());
        assert!(ljung_box(&[1.0; 30], 5, 0, 0.05).is_err());
    }

    #[test]
    fn ljung_box_monotone_in_lags() {
        let v = wiggle(120);
        let mut prev = 0.0;
        for l in 1..30 {
            let q = ljung_box(&v, l, 0, 0.05).unwrap().statistic;
            assert!(q >= prev && q >= 0.0);
            prev = q;
        }
    }

    #[test]
    fn jarque_bera_table_plugin() {
        let jb = jarque_bera_statistic(288, 1.015012, 3.449577);
        assert!((jb - 51.9).abs() < 0.05, "{jb}");
        assert!(chi_square_survival(jb, 2).unwrap() < 0.05);
    }

    #[test]
    fn jarque_bera_zero_for_symmetric_mesokurtic() {
        assert_eq!(jarque_bera_statistic(100, 0.0, 3.0), 0.0);
        assert!(jarque_bera(&[1.0; 10], 0.05).is_err());
        assert!(jarque_bera(&[1.0, 2.0, 3.0], 0.05).is_err());
    }

    #[test]
    fn jarque_bera_affine_invariance() {
        let v = wiggle(200);
        let a = jarque_bera(&v, 0.05).unwrap();
        let w: Vec<f64> = v.iter().map(|x| 3.7 * x - 11.0).collect();
        let b = jarque_bera(&w, 0.05).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-9 * a.statistic.max(1.0));
    }
}
