//! GARCH(p, q) error model: `Z_t = √h_t · e_t` with
//! `h_t = ω + Σ α_i Z²_{t−i} + Σ β_j h_{t−j}` and `Σα + Σβ < 1`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::innovation::{DistFamily, InnovationDist};
use crate::optim::{self, CovarianceKind, NelderMead};

/// Variance-equation coefficients. `alpha` are the ARCH terms on lagged
/// squared shocks, `beta` the GARCH terms on lagged variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl GarchParams {
    pub fn new(omega: f64, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let p = Self { omega, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid(format!("omega must be > 0, got {}", self.omega)));
        }
        if let Some(a) = self
            .alpha
            .iter()
            .chain(&self.beta)
            .find(|c| !(**c >= 0.0 && c.is_finite()))
        {
            return Err(Error::invalid(format!("GARCH coefficients must be >= 0, got {a}")));
        }
        if !(self.persistence() < 1.0) {
            return Err(Error::invalid(format!(
                "sum of ARCH and GARCH coefficients must be < 1, got {}",
                self.persistence()
            )));
        }
        Ok(())
    }

    pub fn order(&self) -> GarchOrder {
        GarchOrder::new(self.alpha.len(), self.beta.len())
    }

    /// `Σα + Σβ`.
    pub fn persistence(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    /// `ω / (1 − Σα − Σβ)`.
    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.persistence())
    }
}

/// `p` ARCH lags, `q` GARCH lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GarchOrder {
    pub p: usize,
    pub q: usize,
}

impl GarchOrder {
    pub const fn new(p: usize, q: usize) -> Self {
        Self { p, q }
    }
}

impl fmt::Display for GarchOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

impl FromStr for GarchOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let nums: std::result::Result<Vec<usize>, _> = s
            .trim_matches(|c| c == '(' || c == ')')
            .split(',')
            .map(|p| p.trim().parse())
            .collect();
        match nums.as_deref() {
            Ok([p, q]) => Ok(Self::new(*p, *q)),
            _ => Err(Error::invalid(format!("expected GARCH order p,q, got {s:?}"))),
        }
    }
}

/// Pre-sample value used for both `h` and `Z²`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum VarianceInit {
    /// Sample variance of the residuals.
    #[default]
    SampleVariance,
    /// `ω / (1 − Σα − Σβ)`.
    Unconditional,
    Fixed(f64),
}

impl VarianceInit {
    pub fn resolve(&self, params: &GarchParams, residuals: &[f64]) -> f64 {
        match *self {
            Self::SampleVariance => sample_variance(residuals),
            Self::Unconditional => params.unconditional_variance(),
            Self::Fixed(v) => v,
        }
    }
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

/// Run the recursion with pre-sample value `h0`. Returns the in-sample
/// variances (entry `t` is the variance of `residuals[t]`, the first being
/// `h0`) followed by the variance of the next, unobserved shock.
fn recursion(omega: f64, alpha: &[f64], beta: &[f64], residuals: &[f64], h0: f64) -> Vec<f64> {
    let n = residuals.len();
    let mut h = Vec::with_capacity(n + 1);
    h.push(h0);
    for t in 1..=n {
        let mut v = omega;
        for (i, a) in alpha.iter().enumerate() {
            // Z_{t-1-i}; pre-sample squares fall back to h0
            v += a * if t > i { residuals[t - 1 - i].powi(2) } else { h0 };
        }
        for (j, b) in beta.iter().enumerate() {
            v += b * if t > j { h[t - 1 - j] } else { h0 };
        }
        h.push(v);
    }
    h
}

fn check_length(params: &GarchParams, residuals: &[f64]) -> Result<()> {
    let need = params.alpha.len().max(params.beta.len()) + 1;
    if residuals.len() < need {
        return Err(Error::invalid(format!(
            "GARCH{} recursion needs at least {need} residuals, got {}",
            params.order(),
            residuals.len()
        )));
    }
    if residuals.iter().any(|z| !z.is_finite()) {
        return Err(Error::data("residuals contain non-finite values"));
    }
    Ok(())
}

/// Conditional variances updated by each residual: entry `t` is the
/// variance of the shock following `residuals[t]`, i.e.
/// `ω + Σ α_i Z²_{t+1−i} + Σ β_j h_{t+1−j}`, with pre-sample `Z²` and `h`
/// taken from `init`.
pub fn conditional_variance(params: &GarchParams, residuals: &[f64], init: VarianceInit) -> Result<Vec<f64>> {
    params.validate()?;
    check_length(params, residuals)?;
    let h0 = init.resolve(params, residuals);
    if !(h0 > 0.0) {
        return Err(Error::invalid(format!("initial variance must be > 0, got {h0}")));
    }
    let h = recursion(params.omega, &params.alpha, &params.beta, residuals, h0);
    Ok(h[1..].to_vec())
}

fn loglik_from_path(h: &[f64], residuals: &[f64], dist: &InnovationDist) -> f64 {
    residuals
        .iter()
        .zip(h)
        .map(|(z, v)| {
            if !(*v > 0.0) {
                return f64::NAN;
            }
            -0.5 * v.ln() + dist.ln_density(z / v.sqrt())
        })
        .sum()
}

fn loglik_unchecked(omega: f64, alpha: &[f64], beta: &[f64], residuals: &[f64], h0: f64, dist: &InnovationDist) -> f64 {
    let h = recursion(omega, alpha, beta, residuals, h0);
    loglik_from_path(&h[..residuals.len()], residuals, dist)
}

/// `Σ_t [−½ ln h_t + ln f(Z_t / √h_t)]` for the standardised density `f`.
pub fn garch_loglik(params: &GarchParams, residuals: &[f64], dist: &InnovationDist, init: VarianceInit) -> Result<f64> {
    params.validate()?;
    dist.validate()?;
    if residuals.is_empty() {
        return Err(Error::invalid("log-likelihood needs at least one residual"));
    }
    let h0 = init.resolve(params, residuals);
    Ok(loglik_unchecked(
        params.omega,
        &params.alpha,
        &params.beta,
        residuals,
        h0,
        dist,
    ))
}

/// A fitted (or fully specified) GARCH error model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchModel {
    pub params: GarchParams,
    pub dist: InnovationDist,
    pub init: VarianceInit,
    /// Pre-sample value actually used.
    pub h0: f64,
    /// Residuals the model was evaluated on.
    pub residuals: Vec<f64>,
    /// Conditional variance of each residual.
    pub h: Vec<f64>,
    /// Variance of the first out-of-sample shock.
    pub next_variance: f64,
    pub loglik: f64,
    pub param_names: Vec<String>,
    pub stderr: Vec<Option<f64>>,
    pub covariance: CovarianceKind,
    pub iterations: usize,
    pub converged: bool,
}

impl GarchModel {
    pub fn from_params(
        params: GarchParams,
        dist: InnovationDist,
        residuals: &[f64],
        init: VarianceInit,
    ) -> Result<Self> {
        params.validate()?;
        dist.validate()?;
        check_length(&params, residuals)?;
        let h0 = init.resolve(&params, residuals);
        if !(h0 > 0.0) {
            return Err(Error::data("initial variance is not positive (constant residuals?)"));
        }
        let mut path = recursion(params.omega, &params.alpha, &params.beta, residuals, h0);
        let next_variance = path.pop().expect("recursion yields n + 1 values");
        let loglik = loglik_from_path(&path, residuals, &dist);
        let mut names = vec!["omega".to_string()];
        names.extend((1..=params.alpha.len()).map(|i| format!("alpha{i}")));
        names.extend((1..=params.beta.len()).map(|j| format!("beta{j}")));
        match dist {
            InnovationDist::Normal => {}
            InnovationDist::StudentT { .. } => names.push("nu".into()),
            InnovationDist::Gamma { .. } => names.push("shape".into()),
        }
        Ok(Self {
            stderr: vec![None; names.len()],
            param_names: names,
            params,
            dist,
            init,
            h0,
            residuals: residuals.to_vec(),
            h: path,
            next_variance,
            loglik,
            covariance: CovarianceKind::Hessian,
            iterations: 0,
            converged: false,
        })
    }

    pub fn order(&self) -> GarchOrder {
        self.params.order()
    }

    /// Estimates in `param_names` order.
    pub fn estimates(&self) -> Vec<f64> {
        let mut v = vec![self.params.omega];
        v.extend(&self.params.alpha);
        v.extend(&self.params.beta);
        match self.dist {
            InnovationDist::Normal => {}
            InnovationDist::StudentT { nu } => v.push(nu),
            InnovationDist::Gamma { shape } => v.push(shape),
        }
        v
    }

    /// `Z_t / √h_t`.
    pub fn standardized_residuals(&self) -> Vec<f64> {
        self.residuals.iter().zip(&self.h).map(|(z, h)| z / h.sqrt()).collect()
    }

    pub fn forecast_variance(&self, horizon: usize) -> Result<Vec<f64>> {
        forecast_variance(self, horizon)
    }

    fn with_dist_param(&self, value: f64) -> InnovationDist {
        match self.dist {
            InnovationDist::Normal => InnovationDist::Normal,
            InnovationDist::StudentT { .. } => InnovationDist::StudentT { nu: value },
            InnovationDist::Gamma { .. } => InnovationDist::Gamma { shape: value },
        }
    }

    fn standard_errors(&self, kind: CovarianceKind) -> Vec<Option<f64>> {
        let (p, q) = (self.params.alpha.len(), self.params.beta.len());
        let theta = self.estimates();
        let has_shape = theta.len() > 1 + p + q;
        let h0 = self.h0;
        let residuals = &self.residuals;
        let per_obs = |t: &[f64]| -> Vec<f64> {
            let dist = if has_shape {
                self.with_dist_param(t[1 + p + q])
            } else {
                self.dist
            };
            let h = recursion(t[0], &t[1..1 + p], &t[1 + p..1 + p + q], residuals, h0);
            residuals
                .iter()
                .zip(&h)
                .map(|(z, v)| -0.5 * v.ln() + dist.ln_density(z / v.sqrt()))
                .collect()
        };
        let steps: Vec<f64> = theta
            .iter()
            .enumerate()
            .map(|(i, v)| match i {
                0 => 1e-4 * v,
                i if i <= p + q => 1e-4 * v.abs().max(1e-3),
                _ => 1e-4 * v.abs().max(1.0),
            })
            .collect();
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

#[derive(Debug, Clone)]
pub struct GarchFitOptions {
    pub init: VarianceInit,
    pub covariance: CovarianceKind,
    pub optimizer: NelderMead,
}

impl Default for GarchFitOptions {
    fn default() -> Self {
        Self {
            init: VarianceInit::SampleVariance,
            covariance: CovarianceKind::Hessian,
            optimizer: NelderMead {
                initial_step: 0.5,
                ..NelderMead::default()
            },
        }
    }
}

pub const MIN_GARCH_OBS: usize = 50;

/// Unconstrained coordinates: `ω = s²·e^{u₀}`; `(α, β, slack)` is the
/// softmax of `(u_α, u_β, 0)`, so `Σα + Σβ = 1 − slack < 1`; the shape
/// parameter (if any) is `2 + e^u` for student-t and `e^u` for gamma.
struct Transform {
    p: usize,
    q: usize,
    scale: f64,
    family: DistFamily,
}

impl Transform {
    fn dim(&self) -> usize {
        1 + self.p + self.q + usize::from(self.family != DistFamily::Normal)
    }

    fn decode(&self, u: &[f64]) -> (GarchParams, InnovationDist) {
        let omega = self.scale * u[0].exp();
        let logits = &u[1..1 + self.p + self.q];
        let max = logits.iter().copied().fold(0.0_f64, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let denom = exps.iter().sum::<f64>() + (-max).exp();
        let weights: Vec<f64> = exps.iter().map(|e| e / denom).collect();
        let dist = match self.family {
            DistFamily::Normal => InnovationDist::Normal,
            DistFamily::StudentT => InnovationDist::StudentT {
                nu: 2.0 + u[self.dim() - 1].exp(),
            },
            DistFamily::Gamma => InnovationDist::Gamma {
                shape: u[self.dim() - 1].exp(),
            },
        };
        (
            GarchParams {
                omega,
                alpha: weights[..self.p].to_vec(),
                beta: weights[self.p..].to_vec(),
            },
            dist,
        )
    }

    fn encode(&self, alpha_total: f64, beta_total: f64, shape: f64) -> Vec<f64> {
        let slack = 1.0 - alpha_total - beta_total;
        let mut u = vec![(slack).ln()];
        let a_each = alpha_total / self.p.max(1) as f64;
        let b_each = beta_total / self.q.max(1) as f64;
        u.extend(std::iter::repeat_n((a_each / slack).ln(), self.p));
        u.extend(std::iter::repeat_n((b_each / slack).ln(), self.q));
        match self.family {
            DistFamily::Normal => {}
            DistFamily::StudentT => u.push((shape - 2.0).ln()),
            DistFamily::Gamma => u.push(shape.ln()),
        }
        u
    }
}

/// Maximum-likelihood fit on mean-model residuals.
pub fn fit_garch(
    residuals: &[f64],
    order: GarchOrder,
    family: DistFamily,
    options: &GarchFitOptions,
) -> Result<GarchModel> {
    if order.p + order.q == 0 {
        return Err(Error::invalid("GARCH order needs at least one ARCH or GARCH term"));
    }
    if order.p == 0 {
        return Err(Error::invalid("GARCH with no ARCH term is not identified"));
    }
    if residuals.len() < MIN_GARCH_OBS {
        return Err(Error::invalid(format!(
            "GARCH fit needs at least {MIN_GARCH_OBS} residuals, got {}",
            residuals.len()
        )));
    }
    if residuals.iter().any(|z| !z.is_finite()) {
        return Err(Error::data("residuals contain non-finite values"));
    }
    let s2 = sample_variance(residuals);
    if !(s2 > 0.0) {
        return Err(Error::data("residuals have zero variance"));
    }
    let tr = Transform {
        p: order.p,
        q: order.q,
        scale: s2,
        family,
    };
    let n = residuals.len() as f64;
    let objective = |u: &[f64]| {
        let (params, dist) = tr.decode(u);
        let h0 = options.init.resolve(&params, residuals);
        -loglik_unchecked(params.omega, &params.alpha, &params.beta, residuals, h0, &dist) / n
    };

    let default_shape = match family {
        DistFamily::Normal => 0.0,
        DistFamily::StudentT => 8.0,
        DistFamily::Gamma => 4.0,
    };
    let beta_grid: &[f64] = if order.q == 0 {
        &[0.0]
    } else {
        &[0.0, 0.05, 0.3, 0.6, 0.85]
    };
    let mut starts: Vec<(f64, Vec<f64>)> = Vec::new();
    for &a in &[0.05, 0.1, 0.3, 0.6, 0.8] {
        for &b in beta_grid {
            if a + b < 0.97 {
                // b = 0 is approached, not hit, so the logit stays finite
                let u = tr.encode(a, b.max(1e-3), default_shape);
                starts.push((objective(&u), u));
            }
        }
    }
    starts.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut best: Option<optim::Minimum> = None;
    for (_, u0) in starts.iter().take(2) {
        let m = options.optimizer.minimize(objective, u0);
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    if !best.converged || !best.value.is_finite() {
        return Err(Error::Convergence {
            stage: "garch",
            iterations: best.iterations,
            best_objective: best.value,
            best_params: best.x,
        });
    }

    let (params, dist) = tr.decode(&best.x);
    let params = enforce_strict_constraint(params);
    let mut model = GarchModel::from_params(params, dist, residuals, options.init)?;
    model.iterations = best.iterations;
    model.converged = true;
    model.covariance = options.covariance;
    model.stderr = model.standard_errors(options.covariance);
    Ok(model)
}

/// Rounding in the softmax can land exactly on `Σ = 1`; pull back by one ulp-scale step.
fn enforce_strict_constraint(mut p: GarchParams) -> GarchParams {
    while p.persistence() >= 1.0 {
        for c in p.alpha.iter_mut().chain(p.beta.iter_mut()) {
            *c *= 1.0 - 1e-12;
        }
    }
    p
}

/// Variance forecasts for the next `horizon` shocks. Future squared shocks
/// are replaced by their expectation, so for GARCH(1,1)
/// `h_{t+k} = ω + (α+β)·h_{t+k−1}` for `k ≥ 2`.
pub fn forecast_variance(model: &GarchModel, horizon: usize) -> Result<Vec<f64>> {
    if horizon < 1 {
        return Err(Error::invalid("forecast horizon must be at least 1"));
    }
    let z2: Vec<f64> = model.residuals.iter().map(|z| z * z).collect();
    Ok(project_variance(
        &model.params,
        &z2,
        &model.h,
        model.next_variance,
        horizon,
    ))
}

/// Forecast recursion from observed squared shocks `z2`, their variances
/// `h` (aligned) and the already known next variance.
pub fn project_variance(params: &GarchParams, z2: &[f64], h: &[f64], next: f64, horizon: usize) -> Vec<f64> {
    let n = z2.len();
    let mut zz = z2.to_vec();
    let mut hh = h.to_vec();
    hh.push(next);
    let mut out = vec![next];
    for k in 1..horizon {
        let t = n + k;
        // expectation of the just-forecast squared shock is its variance
        zz.push(hh[t - 1]);
        let mut v = params.omega;
        for (i, a) in params.alpha.iter().enumerate() {
            v += a * if t > i { zz[t - 1 - i] } else { next };
        }
        for (j, b) in params.beta.iter().enumerate() {
            v += b * if t > j { hh[t - 1 - j] } else { next };
        }
        hh.push(v);
        out.push(v);
    }
    out
}

pub const GARCH_BURN_IN: usize = 500;

/// Simulate `n` shocks and their true conditional variances.
pub fn simulate_garch(params: &GarchParams, n: usize, seed: u64, dist: InnovationDist) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate()?;
    dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = GARCH_BURN_IN + n;
    let uncond = params.unconditional_variance();
    let mut z = Vec::with_capacity(total);
    let mut h: Vec<f64> = Vec::with_capacity(total);
    for t in 0..total {
        let mut v = params.omega;
        for (i, a) in params.alpha.iter().enumerate() {
            v += a * if t > i { z[t - 1 - i] * z[t - 1 - i] } else { uncond };
        }
        for (j, b) in params.beta.iter().enumerate() {
            v += b * if t > j { h[t - 1 - j] } else { uncond };
        }
        h.push(v);
        z.push(v.sqrt() * dist.sample(&mut rng));
    }
    Ok((z[GARCH_BURN_IN..].to_vec(), h[GARCH_BURN_IN..].to_vec()))
}

/// A maximal run of elevated conditional variance (indices inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatilityCluster {
    pub start: usize,
    pub end: usize,
    pub peak_variance: f64,
}

impl VolatilityCluster {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Runs where `h_t > threshold_multiple × median(h)`, in order.
pub fn detect_clusters(h: &[f64], threshold_multiple: f64) -> Result<Vec<VolatilityCluster>> {
    if h.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(v) = h.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::invalid(format!("conditional variances must be > 0, found {v}")));
    }
    let mut sorted = h.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let threshold = threshold_multiple * median;
    let mut clusters = Vec::new();
    let mut current: Option<VolatilityCluster> = None;
    for (t, &v) in h.iter().enumerate() {
        if v > threshold {
            match current.as_mut() {
                Some(c) => {
                    c.end = t;
                    c.peak_variance = c.peak_variance.max(v);
                }
                None => {
                    current = Some(VolatilityCluster {
                        start: t,
                        end: t,
                        peak_variance: v,
                    })
                }
            }
        } else if let Some(c) = current.take() {
            clusters.push(c);
        }
    }
    clusters.extend(current);
    Ok(clusters)
}
