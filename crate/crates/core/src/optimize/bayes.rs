use std::f64::consts::LN_10;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    nelder_mead, Bounds, Budget, Method, Objective, OptimizationResult, OptimizeError, OptimizerConfig, Recorder,
    Termination,
};

const SQRT5: f64 = 2.236_067_977_499_79;
const LOG_LENGTH: (f64, f64) = (-2.0 * LN_10, LN_10); // ln 0.01, ln 10
const LOG_VARIANCE: (f64, f64) = (-2.0 * LN_10, 2.0 * LN_10); // ln 0.01, ln 100

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BayesParams {
    pub initial_points: usize,
    pub noise: f64,
    /// Exploration margin of expected improvement, in standardized units.
    /// With an evaluation budget it decays linearly to zero.
    pub xi: f64,
    pub candidates: usize,
    pub polish: usize,
    /// Random restarts of the hyperparameter fit besides the previous optimum.
    pub fit_restarts: usize,
    pub fit_iterations: usize,
}

impl Default for BayesParams {
    fn default() -> Self {
        Self {
            initial_points: 12,
            noise: 1e-6,
            xi: 0.01,
            candidates: 4096,
            polish: 8,
            fit_restarts: 1,
            fit_iterations: 80,
        }
    }
}

impl BayesParams {
    pub(crate) fn validate(&self, budget: Budget) -> Result<(), OptimizeError> {
        if self.initial_points == 0 || self.candidates == 0 || !(self.noise > 0.0) || !(self.xi >= 0.0) {
            return Err(OptimizeError::InvalidConfig(format!(
                "invalid Bayesian parameters {self:?}"
            )));
        }
        if let Some(n) = budget.max_evaluations {
            if (n as usize) < self.initial_points {
                return Err(OptimizeError::InvalidConfig(format!(
                    "budget of {n} evaluations is smaller than the {}-point initial design",
                    self.initial_points
                )));
            }
        }
        Ok(())
    }
}

/// Zero-mean GP with an ARD Matérn-5/2 kernel over standardized targets.
/// Hyperparameters are `[ln ℓ_1, …, ln ℓ_d, ln σ_f²]`.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    x: Vec<Vec<f64>>,
    theta: Vec<f64>,
    inv_len: Vec<f64>,
    signal: f64,
    y_mean: f64,
    y_scale: f64,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    best: f64,
    nll: f64,
}

fn matern52(a: &[f64], b: &[f64], inv_len: &[f64], signal: f64) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(inv_len)
        .map(|((x, y), l)| ((x - y) * l).powi(2))
        .sum();
    let s = SQRT5 * r2.sqrt();
    signal * (1.0 + s + s * s / 3.0) * (-s).exp()
}

impl GaussianProcess {
    /// Conditions on `(x, y)` with fixed hyperparameters. `None` when the
    /// kernel matrix is not numerically positive definite.
    pub fn with_hyperparameters(x: &[Vec<f64>], y: &[f64], theta: &[f64], noise: f64) -> Option<Self> {
        let n = x.len();
        let d = x.first()?.len();
        if y.len() != n || theta.len() != d + 1 || theta.iter().any(|t| !t.is_finite()) {
            return None;
        }
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let ys = DVector::from_iterator(n, y.iter().map(|v| (v - y_mean) / y_scale));

        let inv_len: Vec<f64> = theta[..d].iter().map(|t| (-t).exp()).collect();
        let signal = theta[d].exp();
        let k = DMatrix::from_fn(n, n, |i, j| {
            matern52(&x[i], &x[j], &inv_len, signal) + if i == j { noise } else { 0.0 }
        });
        let chol = k.cholesky()?;
        let alpha = chol.solve(&ys);
        let l = chol.unpack();
        let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
        let nll = 0.5 * ys.dot(&alpha) + log_det + 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        if !nll.is_finite() {
            return None;
        }
        Some(Self {
            x: x.to_vec(),
            theta: theta.to_vec(),
            inv_len,
            signal,
            y_mean,
            y_scale,
            chol: l,
            best: ys.max(),
            alpha,
            nll,
        })
    }

    /// Maximizes the log marginal likelihood by Nelder–Mead from each start.
    pub fn fit(x: &[Vec<f64>], y: &[f64], starts: &[Vec<f64>], noise: f64, iterations: usize) -> Option<Self> {
        let d = x.first()?.len();
        let clamp = |t: &[f64]| -> Vec<f64> {
            t.iter()
                .enumerate()
                .map(|(i, v)| {
                    let (lo, hi) = if i < d { LOG_LENGTH } else { LOG_VARIANCE };
                    v.clamp(lo, hi)
                })
                .collect()
        };
        let mut best: Option<Self> = None;
        for start in starts {
            let nll = |t: &[f64]| Self::with_hyperparameters(x, y, &clamp(t), noise).map_or(f64::INFINITY, |gp| gp.nll);
            let (t, _) = nelder_mead(nll, &clamp(start), 0.5, iterations, 1e-8);
            if let Some(gp) = Self::with_hyperparameters(x, y, &clamp(&t), noise) {
                if best.as_ref().is_none_or(|b| gp.nll < b.nll) {
                    best = Some(gp);
                }
            }
        }
        best
    }

    pub fn hyperparameters(&self) -> &[f64] {
        &self.theta
    }

    pub fn negative_log_likelihood(&self) -> f64 {
        self.nll
    }

    /// Posterior mean and standard deviation in standardized units.
    pub fn predict_standardized(&self, q: &[f64]) -> (f64, f64) {
        let ks = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|xi| matern52(xi, q, &self.inv_len, self.signal)),
        );
        let mean = ks.dot(&self.alpha);
        let v = self
            .chol
            .solve_lower_triangular(&ks)
            .unwrap_or_else(|| DVector::zeros(self.x.len()));
        let var = (self.signal - v.dot(&v)).max(0.0);
        (mean, var.sqrt())
    }

    /// Posterior mean and standard deviation in the units of `y`.
    pub fn predict(&self, q: &[f64]) -> (f64, f64) {
        let (m, s) = self.predict_standardized(q);
        (self.y_mean + self.y_scale * m, self.y_scale * s)
    }

    /// Largest observed target in standardized units.
    pub fn best_standardized(&self) -> f64 {
        self.best
    }
}

/// Expected improvement over `best` for maximization, in standardized
/// units, with margin `xi`.
pub fn expected_improvement(mean: f64, sd: f64, best: f64, xi: f64) -> f64 {
    let gain = mean - best - xi;
    if sd <= 1e-300 {
        return gain.max(0.0);
    }
    let z = gain / sd;
    let cdf = 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (gain * cdf + sd * pdf).max(0.0)
}

fn is_duplicate(u: &[f64], seen: &[Vec<f64>]) -> bool {
    seen.iter().any(|s| s.iter().zip(u).all(|(a, b)| (a - b).abs() <= 1e-9))
}

/// GP-EI Bayesian optimization on the unit box.
pub fn optimize_bayes(
    objective: &dyn Objective,
    bounds: &Bounds,
    config: &OptimizerConfig,
) -> Result<OptimizationResult, OptimizeError> {
    let p = config.bayes;
    p.validate(config.budget)?;
    let mut rec = Recorder::new(objective, bounds, config.budget)?;
    let d = bounds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut step = 0u64;

    let mut design = vec![vec![0.5; d]];
    for _ in 1..p.initial_points {
        design.push((0..d).map(|_| rng.random::<f64>()).collect());
    }
    let stop = |rec: &Recorder, step: u64| -> Option<Termination> {
        if rec.evaluations_left() == Some(0) || config.budget.max_steps.is_some_and(|s| step >= s) {
            Some(Termination::Budget)
        } else if rec.out_of_time() {
            Some(Termination::WallClock)
        } else {
            None
        }
    };
    for u in design {
        if let Some(t) = stop(&rec, step) {
            return rec.finish(Method::Bayesian, config.seed, step, t);
        }
        step += 1;
        ys.push(rec.evaluate(step, &u)?);
        xs.push(u);
    }

    let mut theta: Vec<f64> = vec![(0.5f64).ln(); d];
    theta.push(0.0);
    let terminated_by = loop {
        if let Some(t) = stop(&rec, step) {
            break t;
        }
        let mut starts = vec![theta.clone()];
        for _ in 0..p.fit_restarts {
            let mut t: Vec<f64> = (0..d).map(|_| rng.random_range(LOG_LENGTH.0..LOG_LENGTH.1)).collect();
            t.push(rng.random_range(-1.0..1.0));
            starts.push(t);
        }
        let gp = match GaussianProcess::fit(&xs, &ys, &starts, p.noise, p.fit_iterations) {
            Some(gp) => gp,
            None => {
                rec.note("hyperparameter fit failed; kept previous values");
                match GaussianProcess::with_hyperparameters(&xs, &ys, &theta, p.noise)
                    .or_else(|| GaussianProcess::with_hyperparameters(&xs, &ys, &theta, p.noise * 1e4))
                {
                    Some(gp) => gp,
                    None => {
                        return Err(OptimizeError::Undefined(
                            "Gaussian process is singular even with previous hyperparameters".into(),
                        ))
                    }
                }
            }
        };
        theta = gp.hyperparameters().to_vec();
        let best = gp.best_standardized();
        // the margin shrinks linearly to zero over an evaluation budget so
        // the last acquisitions refine the incumbent
        let xi = match config.budget.max_evaluations {
            Some(n) if n > p.initial_points as u64 => {
                let done = (xs.len() - p.initial_points) as f64;
                p.xi * (1.0 - done / (n - p.initial_points as u64) as f64).max(0.0)
            }
            _ => p.xi,
        };
        let ei = |u: &[f64]| {
            let (m, s) = gp.predict_standardized(u);
            expected_improvement(m, s, best, xi)
        };

        let candidates: Vec<Vec<f64>> = (0..p.candidates)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect();
        let scores: Vec<f64> = candidates.par_iter().map(|u| ei(u)).collect();
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        // local search from the best candidates and from the incumbent
        let incumbent = (0..ys.len()).fold(0, |b, i| if ys[i] > ys[b] { i } else { b });
        let mut starts: Vec<Vec<f64>> = order[..p.polish.min(order.len())]
            .iter()
            .map(|&i| candidates[i].clone())
            .collect();
        starts.push(xs[incumbent].clone());
        let polished: Vec<(Vec<f64>, f64)> = starts
            .par_iter()
            .map(|start| {
                let clip = |u: &[f64]| -> Vec<f64> { u.iter().map(|v| v.clamp(0.0, 1.0)).collect() };
                let (u, neg) = nelder_mead(|u| -ei(&clip(u)), start, 0.05, 150, 1e-14);
                (clip(&u), -neg)
            })
            .collect();
        let mut pool: Vec<(Vec<f64>, f64)> = polished;
        pool.extend(order.iter().map(|&i| (candidates[i].clone(), scores[i])));
        pool.sort_by(|a, b| b.1.total_cmp(&a.1));
        let next = pool
            .into_iter()
            .map(|(u, _)| u)
            .find(|u| !is_duplicate(u, &xs))
            .unwrap_or_else(|| (0..d).map(|_| rng.random::<f64>()).collect());

        step += 1;
        ys.push(rec.evaluate(step, &next)?);
        xs.push(next);
    };
    rec.finish(Method::Bayesian, config.seed, step, terminated_by)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::FnObjective;

    #[test]
    fn interpolates_noiseless_data() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let y: Vec<f64> = x.iter().map(|v| (6.0 * v[0]).sin()).collect();
        let gp = GaussianProcess::fit(&x, &y, &[vec![(0.3f64).ln(), 0.0]], 1e-6, 200).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let (m, s) = gp.predict(xi);
            assert!((m - yi).abs() < 1e-3, "{m} vs {yi}");
            assert!(s < 1e-2);
        }
        let (m, _) = gp.predict(&[0.5 / 7.0]);
        assert!((m - (6.0 * 0.5f64 / 7.0).sin()).abs() < 0.05);
    }

    #[test]
    fn expected_improvement_vanishes_at_observations() {
        let x: Vec<Vec<f64>> = vec![vec![0.1, 0.2], vec![0.5, 0.9], vec![0.8, 0.4], vec![0.3, 0.6]];
        let y = vec![1.0, 3.0, -2.0, 0.5];
        let gp = GaussianProcess::with_hyperparameters(&x, &y, &[(0.4f64).ln(), (0.4f64).ln(), 0.0], 1e-6).unwrap();
        let best = gp.best_standardized();
        for xi in &x {
            let (m, s) = gp.predict_standardized(xi);
            assert!(expected_improvement(m, s, best, 0.01) <= 1e-9);
        }
        let (m, s) = gp.predict_standardized(&[0.95, 0.05]);
        assert!(expected_improvement(m, s, best, 0.01) > 1e-6);
    }

    #[test]
    fn expected_improvement_closed_form() {
        // gain 0 → sd·φ(0)
        let v = expected_improvement(1.0, 2.0, 1.0, 0.0);
        assert!((v - 2.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert_eq!(expected_improvement(3.0, 0.0, 1.0, 0.0), 2.0);
    }

    #[test]
    fn one_dimensional_parabola() {
        let obj = FnObjective::new(1, |x| -(x[0] - 0.3).powi(2));
        let cfg = OptimizerConfig::new(Method::Bayesian, 5).with_budget(Budget::evaluations(30));
        let r = optimize_bayes(&obj, &Bounds::unit(1), &cfg).unwrap();
        assert!((r.best_phi[0] - 0.3).abs() < 0.02, "{:?}", r.best_phi);
        assert_eq!(r.trace.len(), 30);
    }

    #[test]
    fn budget_below_initial_design_is_rejected() {
        let obj = FnObjective::new(1, |x| x[0]);
        let cfg = OptimizerConfig::new(Method::Bayesian, 5).with_budget(Budget::evaluations(11));
        assert!(matches!(
            optimize_bayes(&obj, &Bounds::unit(1), &cfg),
            Err(OptimizeError::InvalidConfig(_))
        ));
    }
}
