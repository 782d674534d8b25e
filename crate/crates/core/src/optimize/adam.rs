use serde::{Deserialize, Serialize};

use super::{
    clamp_unit, finite_diff_gradient, Bounds, Method, Objective, OptimizationResult, OptimizeError, OptimizerConfig,
    Recorder, Termination,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Relative finite-difference step when the objective has no gradient.
    pub fd_step: f64,
    /// Stop once the normalized step stays below `tolerance` for `patience` steps.
    pub tolerance: f64,
    pub patience: u32,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            fd_step: 1e-4,
            tolerance: 1e-6,
            patience: 20,
        }
    }
}

impl AdamParams {
    pub(crate) fn validate(&self) -> Result<(), OptimizeError> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.fd_step > 0.0
            && self.fd_step < 0.5;
        if ok {
            Ok(())
        } else {
            Err(OptimizeError::InvalidConfig(format!(
                "invalid Adam parameters {self:?}"
            )))
        }
    }
}

/// Projected Adam ascent from the box center.
pub fn optimize_gradient(
    objective: &dyn Objective,
    bounds: &Bounds,
    config: &OptimizerConfig,
) -> Result<OptimizationResult, OptimizeError> {
    let p = config.adam;
    p.validate()?;
    let mut rec = Recorder::new(objective, bounds, config.budget)?;
    let d = bounds.dim();
    // worst case cost of one step: value plus two probes per axis
    let fd_cost = 1 + 2 * d as u64;

    let mut u = vec![0.5; d];
    let (mut m, mut v) = (vec![0.0; d], vec![0.0; d]);
    let mut quiet = 0u32;
    let mut step = 0u64;
    let terminated_by = loop {
        if config.budget.max_steps.is_some_and(|s| step >= s) {
            break Termination::Budget;
        }
        if rec.out_of_time() {
            break Termination::WallClock;
        }
        let x = bounds.to_physical(&u);
        let (sample, grad) = match objective.evaluate_with_gradient(&x) {
            Some(r) => {
                if rec.evaluations_left() == Some(0) {
                    break Termination::Budget;
                }
                r.map_err(|e| rec.fail(e))?
            }
            None => {
                if rec.evaluations_left().is_some_and(|left| left < fd_cost) {
                    break Termination::Budget;
                }
                let s = objective.evaluate(&x).map_err(|e| rec.fail(e))?;
                let g =
                    finite_diff_gradient(objective, &x, bounds, p.fd_step, Some(s.value)).map_err(|e| rec.fail(e))?;
                (s, g)
            }
        };
        step += 1;
        rec.push(step, x, sample);

        let t = step as i32;
        let (c1, c2) = (1.0 - p.beta1.powi(t), 1.0 - p.beta2.powi(t));
        let mut moved = 0.0f64;
        for i in 0..d {
            let g = grad[i] * bounds.width(i);
            m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * g;
            v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * g * g;
            let delta = p.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + p.epsilon);
            let next = (u[i] + delta).clamp(0.0, 1.0);
            moved = moved.max((next - u[i]).abs());
            u[i] = next;
        }
        clamp_unit(&mut u);
        quiet = if moved < p.tolerance { quiet + 1 } else { 0 };
        if quiet >= p.patience {
            break Termination::Convergence;
        }
        if rec.evaluations_left() == Some(0) {
            break Termination::Budget;
        }
    };
    rec.finish(Method::Gradient, config.seed, step, terminated_by)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::{Budget, FnObjective};

    fn config(steps: u64) -> OptimizerConfig {
        OptimizerConfig::new(Method::Gradient, 0).with_budget(Budget::steps(steps))
    }

    #[test]
    fn converges_on_concave_quadratic() {
        let target = vec![0.3, 0.7, 0.55, 0.2, 0.9, 0.41];
        let obj = FnObjective::concave_quadratic(target.clone());
        let r = optimize_gradient(&obj, &Bounds::unit(6), &config(2000)).unwrap();
        let last = &r.trace.last().unwrap().phi;
        for (a, b) in last.iter().zip(&target) {
            assert!((a - b).abs() < 1e-3, "{last:?}");
        }
        assert!(r.steps <= 2000);
    }

    #[test]
    fn ends_on_the_face_it_climbs_toward() {
        let obj = FnObjective::new(2, |x| 3.0 * x[0] - x[1]);
        let b = Bounds::new(vec![-2.0, 5.0], vec![4.0, 9.0]).unwrap();
        let r = optimize_gradient(&obj, &b, &config(400)).unwrap();
        assert_eq!(r.best_phi, vec![4.0, 5.0]);
        assert_eq!(r.terminated_by, Termination::Convergence);
    }

    #[test]
    fn finite_difference_probes_are_charged() {
        let obj = FnObjective::new(3, |x| -(x[0] - 0.2).powi(2) - x[1].powi(2) - x[2].powi(2));
        let cfg = OptimizerConfig::new(Method::Gradient, 0).with_budget(Budget {
            max_evaluations: Some(70),
            max_steps: Some(100),
            wall_clock_s: None,
        });
        let r = optimize_gradient(&obj, &Bounds::unit(3), &cfg).unwrap();
        assert_eq!(r.evaluations, obj.evaluations());
        assert!(r.evaluations <= 70);
        assert_eq!(r.trace.len() as u64, r.steps);
    }
}
