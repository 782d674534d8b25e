use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Bounds, Method, Objective, OptimizationResult, OptimizeError, OptimizerConfig, Recorder, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CmaesParams {
    /// Population size; `None` means `4 + ⌊3 ln d⌋`.
    pub population: Option<usize>,
    pub sigma0: f64,
    pub max_resamples: u32,
    /// Stop once `σ·sqrt(λ_max(C))` falls below this.
    pub tolerance: f64,
}

impl Default for CmaesParams {
    fn default() -> Self {
        Self {
            population: None,
            sigma0: 0.3,
            max_resamples: 100,
            tolerance: 1e-10,
        }
    }
}

impl CmaesParams {
    pub(crate) fn validate(&self) -> Result<(), OptimizeError> {
        if !(self.sigma0 > 0.0) || self.population.is_some_and(|l| l < 2) || !(self.tolerance >= 0.0) {
            return Err(OptimizeError::InvalidConfig(format!(
                "invalid CMA-ES parameters {self:?}"
            )));
        }
        Ok(())
    }
}

/// Strategy constants derived from dimension and population size.
struct Constants {
    lambda: usize,
    mu: usize,
    weights: Vec<f64>,
    mueff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,
}

impl Constants {
    fn new(n: usize, population: Option<usize>) -> Self {
        let nf = n as f64;
        let lambda = population.unwrap_or(4 + (3.0 * nf.ln()).floor() as usize);
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
        let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self {
            lambda,
            mu,
            weights,
            mueff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
        }
    }
}

/// (μ/μ_w, λ)-CMA-ES on the unit box, started at the center.
pub fn optimize_cmaes(
    objective: &dyn Objective,
    bounds: &Bounds,
    config: &OptimizerConfig,
) -> Result<OptimizationResult, OptimizeError> {
    let p = config.cmaes;
    p.validate()?;
    let mut rec = Recorder::new(objective, bounds, config.budget)?;
    let n = bounds.dim();
    let k = Constants::new(n, p.population);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut mean = DVector::from_element(n, 0.5);
    let mut sigma = p.sigma0;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut pc = DVector::zeros(n);
    let mut ps = DVector::zeros(n);
    let mut generation = 0u64;

    let terminated_by = loop {
        if config.budget.max_steps.is_some_and(|s| generation >= s) {
            break Termination::Budget;
        }
        if rec.out_of_time() {
            break Termination::WallClock;
        }
        let left = rec.evaluations_left();
        if left == Some(0) {
            break Termination::Budget;
        }
        let eig = SymmetricEigen::new(cov.clone());
        let basis = eig.eigenvectors;
        let scales = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let max_scale = scales.max();
        if sigma * max_scale < p.tolerance {
            break Termination::Convergence;
        }
        let bd = &basis * DMatrix::from_diagonal(&scales);

        // candidates are drawn sequentially so the stream is fixed by the seed
        let mut xs: Vec<DVector<f64>> = Vec::with_capacity(k.lambda);
        for _ in 0..k.lambda {
            let mut x = DVector::zeros(n);
            for attempt in 0..=p.max_resamples {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                x = &mean + sigma * (&bd * z);
                if x.iter().all(|v| (0.0..=1.0).contains(v)) || attempt == p.max_resamples {
                    break;
                }
            }
            xs.push(x.map(|v| v.clamp(0.0, 1.0)));
        }
        let take = left.map_or(k.lambda, |l| k.lambda.min(l as usize));
        let physical: Vec<Vec<f64>> = xs[..take].iter().map(|x| bounds.to_physical(x.as_slice())).collect();
        let samples: Vec<_> = physical.par_iter().map(|x| objective.evaluate(x)).collect();
        generation += 1;
        let mut values = Vec::with_capacity(take);
        for (x, s) in physical.into_iter().zip(samples) {
            let s = s.map_err(|e| rec.fail(e))?;
            values.push(s.value);
            rec.push(generation, x, s);
        }
        if take < k.lambda {
            break Termination::Budget;
        }

        let mut order: Vec<usize> = (0..k.lambda).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let ys: Vec<DVector<f64>> = order[..k.mu].iter().map(|&i| (&xs[i] - &mean) / sigma).collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in k.weights.iter().zip(&ys) {
            y_w += *w * y;
        }
        mean += sigma * &y_w;
        mean.apply(|v| *v = v.clamp(0.0, 1.0));

        let inv_scales = scales.map(|s| if s > 0.0 { 1.0 / s } else { 0.0 });
        let c_inv_sqrt = &basis * DMatrix::from_diagonal(&inv_scales) * basis.transpose();
        ps = (1.0 - k.cs) * &ps + (k.cs * (2.0 - k.cs) * k.mueff).sqrt() * (&c_inv_sqrt * &y_w);
        let ps_norm = ps.norm();
        let decay = 1.0 - (1.0 - k.cs).powi(2 * generation as i32);
        let hsig = ps_norm / decay.sqrt() / k.chi_n < 1.4 + 2.0 / (n as f64 + 1.0);
        let hs = if hsig { 1.0 } else { 0.0 };
        pc = (1.0 - k.cc) * &pc + hs * (k.cc * (2.0 - k.cc) * k.mueff).sqrt() * &y_w;

        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, y) in k.weights.iter().zip(&ys) {
            rank_mu += *w * y * y.transpose();
        }
        let rank_one = &pc * pc.transpose() + (1.0 - hs) * k.cc * (2.0 - k.cc) * &cov;
        cov = (1.0 - k.c1 - k.cmu) * &cov + k.c1 * rank_one + k.cmu * rank_mu;
        cov = 0.5 * (&cov + cov.transpose());
        sigma *= ((k.cs / k.damps) * (ps_norm / k.chi_n - 1.0)).exp();
        // the box has unit width, so larger steps only produce clipped samples
        sigma = sigma.min(1.0);
    };
    rec.finish(Method::Evolutionary, config.seed, generation, terminated_by)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::{Budget, FnObjective};

    #[test]
    fn constants_for_six_dimensions() {
        let k = Constants::new(6, None);
        assert_eq!((k.lambda, k.mu), (9, 4));
        assert!((k.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(k.weights.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn finds_sphere_optimum() {
        let target = vec![0.3, 0.7, 0.55, 0.2, 0.9, 0.41];
        let obj = FnObjective::concave_quadratic(target.clone());
        let cfg = OptimizerConfig::new(Method::Evolutionary, 3).with_budget(Budget::evaluations(3000));
        let r = optimize_cmaes(&obj, &Bounds::unit(6), &cfg).unwrap();
        for (a, b) in r.best_phi.iter().zip(&target) {
            assert!((a - b).abs() < 1e-2, "{:?}", r.best_phi);
        }
        assert!(r.trace.len() as u64 <= 3000);
        assert_eq!(r.evaluations, r.trace.len() as u64);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let obj = FnObjective::new(3, |x| -(x[0] - 0.9).powi(2) - (x[1] - 0.1).powi(2) + x[2]);
        let cfg = OptimizerConfig::new(Method::Evolutionary, 11).with_budget(Budget::evaluations(200));
        let a = optimize_cmaes(&obj, &Bounds::unit(3), &cfg).unwrap();
        let b = optimize_cmaes(&obj, &Bounds::unit(3), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.evaluations, 200);
    }
}
