//! Derivative-free minimisation and finite-difference curvature.
//!
//! Model fitting in this crate works in an unconstrained coordinate system
//! (constraints are enforced by smooth transforms), so a plain Nelder-Mead
//! simplex with restarts is sufficient. Curvature for standard errors is
//! taken in natural parameter coordinates with central differences.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// How parameter standard errors are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    /// Inverse of the numerical observed information.
    #[default]
    Hessian,
    /// Sandwich estimator, robust to misspecified innovation laws.
    Robust,
}

/// Settings for [`NelderMead::minimize`].
#[derive(Debug, Clone)]
pub struct NelderMead {
    pub max_iter: usize,
    /// Simplex diameter (sup-norm, unconstrained coordinates) that counts as converged.
    pub xtol: f64,
    /// Relative spread of objective values across the simplex that counts as converged.
    pub ftol: f64,
    pub initial_step: f64,
    /// Fresh simplexes built around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            xtol: 1e-8,
            ftol: 1e-13,
            initial_step: 0.25,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NelderMead {
    /// Minimise `f` from `x0`. Non-finite objective values are treated as `+inf`,
    /// so infeasible points are simply never accepted.
    ///
    /// The returned point is never worse than `x0`.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let mut eval = |x: &[f64]| {
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };

        let mut best_x = x0.to_vec();
        let mut best_f = eval(x0);
        let mut iterations = 0;
        let mut converged = false;

        if x0.is_empty() {
            return Minimum {
                x: best_x,
                value: best_f,
                iterations: 0,
                converged: true,
            };
        }

        let mut step = self.initial_step;
        for round in 0..=self.restarts {
            let budget = self.max_iter.saturating_sub(iterations);
            if budget == 0 {
                break;
            }
            let run = self.run_simplex(&mut eval, &best_x, best_f, step, budget);
            iterations += run.iterations;
            let improved = run.value < best_f - self.ftol * (1.0 + best_f.abs());
            if run.value <= best_f {
                best_x = run.x;
                best_f = run.value;
            }
            converged = run.converged;
            if round > 0 && !improved && converged {
                break;
            }
            step = (step * 0.5).max(1e-3);
        }

        Minimum {
            x: best_x,
            value: best_f,
            iterations,
            converged,
        }
    }

    fn run_simplex<F>(&self, f: &mut F, x0: &[f64], f0: f64, step: f64, budget: usize) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        let nf = n as f64;
        // Adaptive coefficients (Gao & Han) behave better than the classic
        // ones once the dimension grows past a handful of parameters.
        let alpha = 1.0;
        let gamma = 1.0 + 2.0 / nf;
        let rho = 0.75 - 1.0 / (2.0 * nf);
        let sigma = 1.0 - 1.0 / nf;

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut values: Vec<f64> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        values.push(f0);
        for i in 0..n {
            let mut v = x0.to_vec();
            v[i] += step;
            values.push(f(&v));
            simplex.push(v);
        }

        let mut iterations = 0;
        let mut converged = false;
        let mut order: Vec<usize> = (0..=n).collect();
        while iterations < budget {
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let best = order[0];
            let worst = order[n];
            let second_worst = order[n - 1];

            let diameter = simplex
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
                .fold(0.0_f64, f64::max);
            let spread = values[worst] - values[best];
            if diameter <= self.xtol && (spread <= self.ftol * (1.0 + values[best].abs()) || spread.is_nan()) {
                converged = true;
                break;
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for &idx in order.iter().take(n) {
                for (c, x) in centroid.iter_mut().zip(&simplex[idx]) {
                    *c += x / nf;
                }
            }
            let towards = |coef: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[worst])
                    .map(|(c, w)| c + coef * (c - w))
                    .collect()
            };

            let xr = towards(alpha);
            let fr = f(&xr);
            if fr < values[best] {
                let xe = towards(gamma);
                let fe = f(&xe);
                if fe < fr {
                    simplex[worst] = xe;
                    values[worst] = fe;
                } else {
                    simplex[worst] = xr;
                    values[worst] = fr;
                }
                continue;
            }
            if fr < values[second_worst] {
                simplex[worst] = xr;
                values[worst] = fr;
                continue;
            }
            let (xc, fc) = if fr < values[worst] {
                let xc = towards(alpha * rho);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = towards(-rho);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < values[worst].min(fr) {
                simplex[worst] = xc;
                values[worst] = fc;
                continue;
            }
            // shrink
            let anchor = simplex[best].clone();
            for &idx in order.iter().skip(1) {
                for (x, a) in simplex[idx].iter_mut().zip(&anchor) {
                    *x = a + sigma * (*x - a);
                }
                values[idx] = f(&simplex[idx]);
            }
        }

        let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
        Minimum {
            x: simplex[best].clone(),
            value: values[best],
            iterations,
            converged,
        }
    }
}

/// Central-difference Hessian of `f` at `x` with per-coordinate steps.
pub fn hessian<F>(mut f: F, x: &[f64], steps: &[f64]) -> DMatrix<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x.len();
    let f0 = f(x);
    let mut h = DMatrix::zeros(n, n);
    let mut p = x.to_vec();
    for i in 0..n {
        let hi = steps[i];
        p[i] = x[i] + hi;
        let fp = f(&p);
        p[i] = x[i] - hi;
        let fm = f(&p);
        p[i] = x[i];
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * hi;
                p[j] = x[j] + sj * hj;
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Central-difference Jacobian of a vector-valued `f` (rows = outputs).
pub fn jacobian<F>(mut f: F, x: &[f64], steps: &[f64]) -> DMatrix<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let base = f(x);
    let mut jac = DMatrix::zeros(base.len(), x.len());
    let mut p = x.to_vec();
    for (j, &hj) in steps.iter().enumerate() {
        p[j] = x[j] + hj;
        let up = f(&p);
        p[j] = x[j] - hj;
        let down = f(&p);
        p[j] = x[j];
        for i in 0..base.len() {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * hj);
        }
    }
    jac
}

/// Finite-difference step for a parameter of typical magnitude `scale`.
pub fn fd_step(value: f64, scale: f64) -> f64 {
    1e-4 * value.abs().max(scale)
}

/// Standard errors from an observed-information matrix (negated log-likelihood
/// Hessian). Entries whose variance is not positive come back as `None`.
pub fn stderr_from_information(information: &DMatrix<f64>) -> Vec<Option<f64>> {
    let n = information.nrows();
    match information.clone().try_inverse() {
        Some(cov) => (0..n)
            .map(|i| {
                let v = cov[(i, i)];
                (v.is_finite() && v > 0.0).then(|| v.sqrt())
            })
            .collect(),
        None => vec![None; n],
    }
}

/// Sandwich (QML-robust) standard errors: `A⁻¹ B A⁻¹` with `A` the observed
/// information and `B` the outer product of per-observation scores.
pub fn sandwich_stderr(information: &DMatrix<f64>, scores: &DMatrix<f64>) -> Vec<Option<f64>> {
    let n = information.nrows();
    let Some(a_inv) = information.clone().try_inverse() else {
        return vec![None; n];
    };
    let b = scores.transpose() * scores;
    let cov = &a_inv * b * &a_inv;
    (0..n)
        .map(|i| {
            let v = cov[(i, i)];
            (v.is_finite() && v > 0.0).then(|| v.sqrt())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = NelderMead::default().minimize(rosen, &[-1.2, 1.0]);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6, "{:?}", m.x);
        assert!((m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        // minimum of x^2 restricted to x > 0.5 via NaN outside
        let f = |x: &[f64]| if x[0] <= 0.5 { f64::NAN } else { x[0] * x[0] };
        let m = NelderMead::default().minimize(f, &[2.0]);
        assert!(m.x[0] > 0.5 && m.x[0] < 0.5 + 1e-6);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| (x[0] - 3.0).abs() + (x[1] + 1.0).powi(2);
        let start = [0.0, 0.0];
        let m = NelderMead::default().minimize(f, &start);
        assert!(m.value <= f(&start));
    }

    #[test]
    fn quadratic_hessian() {
        let f = |x: &[f64]| 3.0 * x[0] * x[0] + 2.0 * x[0] * x[1] + 5.0 * x[1] * x[1];
        let h = hessian(f, &[0.3, -0.7], &[1e-3, 1e-3]);
        assert!((h[(0, 0)] - 6.0).abs() < 1e-6);
        assert!((h[(0, 1)] - 2.0).abs() < 1e-6);
        assert!((h[(1, 1)] - 10.0).abs() < 1e-6);
    }
}
