//! ARIMA(p, d, q) mean equation: conditional-sum-of-squares estimation,
//! order selection by information criteria, and mean forecasting.
//!
//! The differenced series `w` follows
//! `w_t − μ = Σ φ_i (w_{t−i} − μ) + e_t + Σ θ_j e_{t−j}`
//! with pre-sample deviations and innovations set to zero, so every one of
//! the `n − d` differenced observations contributes a residual.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::innovation::InnovationDist;
pub use crate::optim::CovarianceKind;
use crate::optim::{self, NelderMead};
use crate::series::{
    self, autocorrelations, difference_values, durbin_levinson, MonthlySeries, TransformStep, YearMonth,
};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub const fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }
}

impl fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

impl FromStr for ArimaOrder {
    type Err = Error;

    /// Parses `p,d,q`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim_matches(|c| c == '(' || c == ')').split(',').collect();
        let nums: std::result::Result<Vec<usize>, _> = parts.iter().map(|p| p.trim().parse()).collect();
        match nums.as_deref() {
            Ok([p, d, q]) => Ok(Self::new(*p, *d, *q)),
            _ => Err(Error::invalid(format!("expected ARIMA order p,d,q, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArimaFitOptions {
    pub include_intercept: bool,
    pub covariance: CovarianceKind,
    pub optimizer: NelderMead,
}

impl Default for ArimaFitOptions {
    fn default() -> Self {
        Self {
            include_intercept: true,
            covariance: CovarianceKind::Hessian,
            optimizer: NelderMead::default(),
        }
    }
}

/// A fitted (or fully specified) ARIMA mean model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    /// Mean of the differenced process (drift when `d ≥ 1`).
    pub intercept: f64,
    pub include_intercept: bool,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    /// Innovation variance, `SSR / (n − d)`.
    pub sigma2: f64,
    /// One residual per differenced observation.
    pub residuals: Vec<f64>,
    /// One-step predictions of the differenced series.
    pub fitted: Vec<f64>,
    pub loglik: f64,
    /// Names aligned with `stderr`.
    pub param_names: Vec<String>,
    /// Standard errors (intercept, AR, MA, sigma2); `None` where the
    /// information matrix gives no positive variance.
    pub stderr: Vec<Option<f64>>,
    pub covariance: CovarianceKind,
    /// Lineage of the series the model was fitted on (empty or `[Log]`).
    pub transform: Vec<TransformStep>,
    pub iterations: usize,
    pub converged: bool,
}

/// Map partial autocorrelations in (−1, 1) to stationary AR coefficients.
pub fn pacf_to_ar(partials: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(partials.len());
    for &r in partials {
        let prev = phi.clone();
        for j in 0..prev.len() {
            phi[j] = prev[j] - r * prev[prev.len() - 1 - j];
        }
        phi.push(r);
    }
    phi
}

/// Inverse of [`pacf_to_ar`]; `None` when the coefficients are not stationary.
pub fn ar_to_pacf(ar: &[f64]) -> Option<Vec<f64>> {
    let mut phi = ar.to_vec();
    let mut partials = vec![0.0; ar.len()];
    for k in (0..ar.len()).rev() {
        let r = phi[k];
        if !(r.abs() < 1.0) {
            return None;
        }
        partials[k] = r;
        let denom = 1.0 - r * r;
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = (prev[j] + r * prev[k - 1 - j]) / denom;
        }
        phi.truncate(k);
    }
    Some(partials)
}

pub fn is_stationary(ar: &[f64]) -> bool {
    ar_to_pacf(ar).is_some()
}

/// MA polynomial `1 + Σ θ_j z^j` has all roots outside the unit circle.
pub fn is_invertible(ma: &[f64]) -> bool {
    let neg: Vec<f64> = ma.iter().map(|t| -t).collect();
    ar_to_pacf(&neg).is_some()
}

/// CSS residual recursion; returns (residuals, one-step predictions).
fn css_recursion(w: &[f64], mu: f64, ar: &[f64], ma: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = w.len();
    let mut resid = vec![0.0; m];
    let mut fitted = vec![0.0; m];
    for t in 0..m {
        let mut pred = mu;
        for (i, phi) in ar.iter().enumerate() {
            if t > i {
                pred += phi * (w[t - 1 - i] - mu);
            }
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                pred += theta * resid[t - 1 - j];
            }
        }
        fitted[t] = pred;
        resid[t] = w[t] - pred;
    }
    (resid, fitted)
}

fn ssr(resid: &[f64]) -> f64 {
    resid.iter().map(|e| e * e).sum()
}

fn concentrated_loglik(ssr: f64, m: usize) -> f64 {
    let mf = m as f64;
    -0.5 * mf * (LN_2PI + (ssr / mf).ln() + 1.0)
}

fn working_values(series: &MonthlySeries) -> Result<Vec<f64>> {
    match series.transform() {
        [] | [TransformStep::Log] => Ok(series.values().to_vec()),
        _ => Err(Error::invalid(
            "ARIMA fits raw or log series; use the order's d for differencing",
        )),
    }
}

/// Unconstrained search coordinates <-> model parameters.
struct Layout {
    intercept: bool,
    p: usize,
    q: usize,
    center: f64,
    scale: f64,
}

impl Layout {
    fn dim(&self) -> usize {
        usize::from(self.intercept) + self.p + self.q
    }

    fn decode(&self, u: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let mut k = 0;
        let mu = if self.intercept {
            k = 1;
            self.center + self.scale * u[0]
        } else {
            0.0
        };
        let ar_partials: Vec<f64> = u[k..k + self.p].iter().map(|x| x.tanh()).collect();
        let ma_partials: Vec<f64> = u[k + self.p..k + self.p + self.q].iter().map(|x| x.tanh()).collect();
        let ar = pacf_to_ar(&ar_partials);
        let ma = pacf_to_ar(&ma_partials).into_iter().map(|x| -x).collect();
        (mu, ar, ma)
    }

    fn encode(&self, mu: f64, ar: &[f64], ma: &[f64]) -> Vec<f64> {
        let clamp_atanh = |r: f64| r.clamp(-0.95, 0.95).atanh();
        let mut u = Vec::with_capacity(self.dim());
        if self.intercept {
            u.push((mu - self.center) / self.scale);
        }
        let ar_p = ar_to_pacf(ar).unwrap_or_else(|| vec![0.0; ar.len()]);
        u.extend(ar_p.into_iter().map(clamp_atanh));
        let neg: Vec<f64> = ma.iter().map(|t| -t).collect();
        let ma_p = ar_to_pacf(&neg).unwrap_or_else(|| vec![0.0; ma.len()]);
        u.extend(ma_p.into_iter().map(clamp_atanh));
        u
    }
}

pub fn min_length(order: ArimaOrder) -> usize {
    10 * (order.p + order.q + 1) + order.d
}

/// Fit by maximising the Gaussian conditional log-likelihood of the
/// `d`-times differenced series.
pub fn fit_arima(series: &MonthlySeries, order: ArimaOrder, options: &ArimaFitOptions) -> Result<ArimaModel> {
    let x = working_values(series)?;
    if x.len() < min_length(order) {
        return Err(Error::invalid(format!(
            "ARIMA{order} needs at least {} observations, got {}",
            min_length(order),
            x.len()
        )));
    }
    let w = difference_values(&x, order.d);
    let m = w.len();
    let mean = w.iter().sum::<f64>() / m as f64;
    let sd = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64).sqrt();
    if !(sd > 0.0) {
        return Err(Error::data("differenced series is constant"));
    }
    let layout = Layout {
        intercept: options.include_intercept,
        p: order.p,
        q: order.q,
        center: mean,
        scale: sd,
    };

    let objective = |u: &[f64]| {
        let (mu, ar, ma) = layout.decode(u);
        let (resid, _) = css_recursion(&w, mu, &ar, &ma);
        ssr(&resid) / (sd * sd * m as f64)
    };

    // Yule-Walker start for AR, zero MA, sample mean.
    let yw_ar = if order.p > 0 {
        let r = autocorrelations(&w, order.p)?;
        durbin_levinson(&r).1
    } else {
        Vec::new()
    };
    let starts = [
        layout.encode(mean, &yw_ar, &vec![0.0; order.q]),
        vec![0.0; layout.dim()],
    ];
    let start = starts
        .iter()
        .min_by(|a, b| objective(a).total_cmp(&objective(b)))
        .cloned()
        .unwrap_or_default();

    let result = options.optimizer.minimize(objective, &start);
    if !result.converged {
        return Err(Error::Convergence {
            stage: "arima",
            iterations: result.iterations,
            best_objective: result.value,
            best_params: result.x,
        });
    }
    let (mu, ar, ma) = layout.decode(&result.x);
    let mut model = ArimaModel::from_parameters(series, order, mu, ar, ma, options.include_intercept)?;
    model.iterations = result.iterations;
    model.converged = true;
    model.covariance = options.covariance;
    model.stderr = model.standard_errors(&w, options.covariance);
    Ok(model)
}

impl ArimaModel {
    /// Evaluate a fully specified model on `series` (residuals, sigma2, loglik).
    pub fn from_parameters(
        series: &MonthlySeries,
        order: ArimaOrder,
        intercept: f64,
        ar: Vec<f64>,
        ma: Vec<f64>,
        include_intercept: bool,
    ) -> Result<Self> {
        if ar.len() != order.p || ma.len() != order.q {
            return Err(Error::invalid("coefficient counts do not match the order"));
        }
        let x = working_values(series)?;
        if x.len() <= order.d {
            return Err(Error::invalid("series shorter than the differencing order"));
        }
        let w = difference_values(&x, order.d);
        let mu = if include_intercept { intercept } else { 0.0 };
        let (residuals, fitted) = css_recursion(&w, mu, &ar, &ma);
        let s = ssr(&residuals);
        let m = w.len();
        let mut names = Vec::new();
        if include_intercept {
            names.push("intercept".to_string());
        }
        names.extend((1..=order.p).map(|i| format!("ar.L{i}")));
        names.extend((1..=order.q).map(|j| format!("ma.L{j}")));
        names.push("sigma2".to_string());
        Ok(Self {
            order,
            intercept: mu,
            include_intercept,
            ar,
            ma,
            sigma2: s / m as f64,
            residuals,
            fitted,
            loglik: concentrated_loglik(s, m),
            stderr: vec![None; names.len()],
            param_names: names,
            covariance: CovarianceKind::Hessian,
            transform: series.transform().to_vec(),
            iterations: 0,
            converged: false,
        })
    }

    /// Number of estimated parameters, innovation variance included.
    pub fn num_params(&self) -> usize {
        usize::from(self.include_intercept) + self.order.p + self.order.q + 1
    }

    pub fn nobs(&self) -> usize {
        self.residuals.len()
    }

    pub fn estimates(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        if self.include_intercept {
            v.push(self.intercept);
        }
        v.extend(&self.ar);
        v.extend(&self.ma);
        v.push(self.sigma2);
        v
    }

    pub fn information_criteria(&self) -> Result<(f64, f64)> {
        information_criteria(self.loglik, self.num_params(), self.nobs())
    }

    fn standard_errors(&self, w: &[f64], kind: CovarianceKind) -> Vec<Option<f64>> {
        let intercept = self.include_intercept;
        let (p, q) = (self.order.p, self.order.q);
        let split = |theta: &[f64]| {
            let k = usize::from(intercept);
            let mu = if intercept { theta[0] } else { 0.0 };
            (
                mu,
                theta[k..k + p].to_vec(),
                theta[k + p..k + p + q].to_vec(),
                theta[k + p + q],
            )
        };
        let per_obs = |theta: &[f64]| -> Vec<f64> {
            let (mu, ar, ma, s2) = split(theta);
            let (resid, _) = css_recursion(w, mu, &ar, &ma);
            resid.iter().map(|e| -0.5 * (LN_2PI + s2.ln() + e * e / s2)).collect()
        };
        let theta = self.estimates();
        let sd = self.sigma2.sqrt();
        let mut steps: Vec<f64> = Vec::with_capacity(theta.len());
        if intercept {
            steps.push(1e-4 * sd.max(self.intercept.abs()));
        }
        steps.extend(
            theta[usize::from(intercept)..theta.len() - 1]
                .iter()
                .map(|v| optim::fd_step(*v, 0.1)),
        );
        steps.push(1e-4 * self.sigma2);

        let negll = |t: &[f64]| -per_obs(t).iter().sum::<f64>();
        let info = optim::hessian(negll, &theta, &steps);
        match kind {
            CovarianceKind::Hessian => optim::stderr_from_information(&info),
            CovarianceKind::Robust => {
                let scores = optim::jacobian(per_obs, &theta, &steps);
                optim::sandwich_stderr(&info, &scores)
            }
        }
    }
}

/// AIC `2k − 2ℓ` and BIC `k ln n − 2ℓ`.
pub fn information_criteria(loglik: f64, k: usize, n: usize) -> Result<(f64, f64)> {
    if k == 0 || n <= k {
        return Err(Error::invalid(format!(
            "information criteria need n > k >= 1 (n = {n}, k = {k})"
        )));
    }
    let kf = k as f64;
    Ok((2.0 * kf - 2.0 * loglik, kf * (n as f64).ln() - 2.0 * loglik))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Aic,
    Bic,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Self::Aic),
            "bic" => Ok(Self::Bic),
            other => Err(Error::invalid(format!("unknown criterion {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFit {
    pub order: ArimaOrder,
    pub k: usize,
    pub nobs: usize,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
}

impl CandidateFit {
    pub fn score(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Aic => self.aic,
            Criterion::Bic => self.bic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSelection {
    pub best: ArimaOrder,
    pub criterion: Criterion,
    /// Successful fits, best first.
    pub ranked: Vec<CandidateFit>,
    /// Orders that could not be fitted, with the reason.
    pub failed: Vec<(ArimaOrder, String)>,
}

/// Grid search over `0..=max_p × 0..=max_d × 0..=max_q`.
pub fn select_order(
    series: &MonthlySeries,
    max_p: usize,
    max_d: usize,
    max_q: usize,
    criterion: Criterion,
    options: &ArimaFitOptions,
) -> Result<OrderSelection> {
    let grid: Vec<ArimaOrder> = (0..=max_p)
        .flat_map(|p| (0..=max_d).flat_map(move |d| (0..=max_q).map(move |q| ArimaOrder::new(p, d, q))))
        .collect();
    let outcomes: Vec<(ArimaOrder, Result<CandidateFit>)> = grid
        .par_iter()
        .map(|&order| {
            let fit = fit_arima(series, order, options).and_then(|m| {
                let (aic, bic) = m.information_criteria()?;
                Ok(CandidateFit {
                    order,
                    k: m.num_params(),
                    nobs: m.nobs(),
                    loglik: m.loglik,
                    aic,
                    bic,
                })
            });
            (order, fit)
        })
        .collect();

    let mut ranked = Vec::new();
    let mut failed = Vec::new();
    for (order, outcome) in outcomes {
        match outcome {
            Ok(c) => ranked.push(c),
            Err(e) => failed.push((order, e.to_string())),
        }
    }
    if ranked.is_empty() {
        return Err(Error::Numerical(format!(
            "no candidate order could be fitted ({} tried)",
            failed.len()
        )));
    }
    ranked.sort_by(|a, b| {
        a.score(criterion)
            .total_cmp(&b.score(criterion))
            .then(a.k.cmp(&b.k))
            .then(a.order.cmp(&b.order))
    });
    Ok(OrderSelection {
        best: ranked[0].order,
        criterion,
        ranked,
        failed,
    })
}

/// Multi-step mean forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanForecast {
    /// First forecast month.
    pub start: YearMonth,
    /// Level units (exponentiated when the model was fitted on logs).
    pub point: Vec<f64>,
    /// Forecasts in the fitted series' units (log units for log models).
    pub working: Vec<f64>,
    /// Forecasts of the differenced series.
    pub differenced: Vec<f64>,
    /// MA(∞) weights of the integrated model, `psi[0] = 1`.
    pub psi: Vec<f64>,
}

/// MA(∞) weights of `φ(B)(1−B)^d x_t = θ(B) e_t` up to `horizon − 1`.
pub fn psi_weights(ar: &[f64], ma: &[f64], d: usize, horizon: usize) -> Vec<f64> {
    // φ*(z) = φ(z)(1 − z)^d written as 1 − Σ φ*_i z^i
    let mut poly = vec![1.0];
    poly.extend(ar.iter().map(|a| -a));
    for _ in 0..d {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c;
        }
        poly = next;
    }
    let phi_star: Vec<f64> = poly[1..].iter().map(|c| -c).collect();
    let mut psi = Vec::with_capacity(horizon);
    for j in 0..horizon {
        if j == 0 {
            psi.push(1.0);
            continue;
        }
        let mut v = if j <= ma.len() { ma[j - 1] } else { 0.0 };
        for (i, ph) in phi_star.iter().enumerate() {
            if i < j {
                v += ph * psi[j - 1 - i];
            }
        }
        psi.push(v);
    }
    psi
}

fn history_values(model: &ArimaModel, history: &MonthlySeries) -> Result<Vec<f64>> {
    if history.transform() == model.transform.as_slice() {
        return Ok(history.values().to_vec());
    }
    if history.is_raw() && model.transform == [TransformStep::Log] {
        return Ok(series::log_transform(history)?.into_values());
    }
    Err(Error::invalid("history transform does not match the model's"))
}

/// Forecast `horizon` months past the end of `history`.
pub fn forecast_mean(model: &ArimaModel, horizon: usize, history: &MonthlySeries) -> Result<MeanForecast> {
    if horizon < 1 {
        return Err(Error::invalid("forecast horizon must be at least 1"));
    }
    let x = history_values(model, history)?;
    let d = model.order.d;
    if x.len() <= d {
        return Err(Error::invalid(format!("history needs more than {d} values")));
    }
    let w = difference_values(&x, d);
    let mu = model.intercept;
    let (resid, _) = css_recursion(&w, mu, &model.ar, &model.ma);

    let m = w.len();
    let mut w_ext = w.clone();
    let mut e_ext = resid;
    for h in 0..horizon {
        let t = m + h;
        let mut pred = mu;
        for (i, phi) in model.ar.iter().enumerate() {
            if t > i {
                pred += phi * (w_ext[t - 1 - i] - mu);
            }
        }
        for (j, theta) in model.ma.iter().enumerate() {
            if t > j {
                pred += theta * e_ext[t - 1 - j];
            }
        }
        w_ext.push(pred);
        e_ext.push(0.0);
    }
    let differenced = w_ext[m..].to_vec();
    let working: Vec<f64> = if d == 0 {
        differenced.clone()
    } else {
        let full = series::integrate_values(&w_ext, &x[..d]);
        full[x.len()..].to_vec()
    };
    let point = if model.transform == [TransformStep::Log] {
        working.iter().map(|v| v.exp()).collect()
    } else {
        working.clone()
    };
    Ok(MeanForecast {
        start: history.end().succ(),
        point,
        working,
        differenced,
        psi: psi_weights(&model.ar, &model.ma, d, horizon),
    })
}

/// Parameters of a stationary, invertible ARMA process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaSpec {
    pub mean: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    /// Innovation standard deviation.
    pub sigma: f64,
}

/// Simulate `n` values; the first `10·(p+q+1)` draws are discarded as burn-in.
pub fn simulate_arma(spec: &ArmaSpec, n: usize, seed: u64, dist: InnovationDist) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("simulation length must be at least 1"));
    }
    if !is_stationary(&spec.ar) {
        return Err(Error::invalid(format!(
            "AR coefficients {:?} are not stationary",
            spec.ar
        )));
    }
    if !is_invertible(&spec.ma) {
        return Err(Error::invalid(format!(
            "MA coefficients {:?} are not invertible",
            spec.ma
        )));
    }
    if !(spec.sigma > 0.0) {
        return Err(Error::invalid("innovation standard deviation must be > 0"));
    }
    dist.validate()?;
    let burn = 10 * (spec.ar.len() + spec.ma.len() + 1);
    let total = burn + n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dev = vec![0.0; total];
    let mut eps = vec![0.0; total];
    for t in 0..total {
        eps[t] = spec.sigma * dist.sample(&mut rng);
        let mut v = eps[t];
        for (i, phi) in spec.ar.iter().enumerate() {
            if t > i {
                v += phi * dev[t - 1 - i];
            }
        }
        for (j, theta) in spec.ma.iter().enumerate() {
            if t > j {
                v += theta * eps[t - 1 - j];
            }
        }
        dev[t] = v;
    }
    Ok(dev[burn..].iter().map(|v| spec.mean + v).collect())
}
