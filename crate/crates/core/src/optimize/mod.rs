//! Box-constrained maximization of the lift-to-drag ratio.
//!
//! Every method works in min-max normalized coordinates `u ∈ [0, 1]^d` and
//! maps to physical values only to call the objective.

mod adam;
mod bayes;
mod cmaes;
mod neldermead;
mod validate;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::Atmosphere;
use crate::space::{DesignVector, ParameterSpace, PARAMETER_NAMES};
use crate::surrogate::{Surrogate, SurrogateError};

pub use adam::{optimize_gradient, AdamParams};
pub use bayes::{expected_improvement, optimize_bayes, BayesParams, GaussianProcess};
pub use cmaes::{optimize_cmaes, CmaesParams};
pub use neldermead::nelder_mead;
pub use validate::{format_table, validate_against_dataset, DatasetCase, TableRow, ValidationRecord};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("objective failed after {evaluations} evaluation(s): {source}")]
    Objective {
        evaluations: u64,
        #[source]
        source: SurrogateError,
    },
    #[error("{0}")]
    Undefined(String),
}

impl OptimizeError {
    pub fn is_remote_failure(&self) -> bool {
        matches!(self, Self::Objective { source, .. } if source.is_remote_failure())
    }
}

/// One objective value, with the coefficients behind it when known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub c_d: Option<f64>,
    pub c_l: Option<f64>,
}

impl Sample {
    pub fn scalar(value: f64) -> Self {
        Self {
            value,
            c_d: None,
            c_l: None,
        }
    }
}

/// A function to maximize, in physical coordinates. Implementations count
/// every call that reaches the underlying model.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn evaluate(&self, x: &[f64]) -> Result<Sample, SurrogateError>;

    /// Value and gradient from a single model call, when available.
    fn evaluate_with_gradient(&self, _x: &[f64]) -> Option<Result<(Sample, Vec<f64>), SurrogateError>> {
        None
    }

    fn evaluations(&self) -> u64;
}

/// Lift-to-drag ratio of a surrogate over the six design parameters.
pub struct WingObjective<'a> {
    surrogate: &'a dyn Surrogate,
    atm: Atmosphere,
    calls: AtomicU64,
    analytic: bool,
}

impl<'a> WingObjective<'a> {
    pub fn new(surrogate: &'a dyn Surrogate, atm: Atmosphere) -> Self {
        Self {
            surrogate,
            atm,
            calls: AtomicU64::new(0),
            analytic: true,
        }
    }

    /// Ignore any analytic gradient and use finite differences instead.
    pub fn without_analytic_gradient(mut self) -> Self {
        self.analytic = false;
        self
    }

    fn split(x: &[f64]) -> Result<DesignVector, SurrogateError> {
        let arr: [f64; 6] = x
            .try_into()
            .map_err(|_| SurrogateError::InvalidInput(format!("expected 6 parameters, got {}", x.len())))?;
        Ok(DesignVector(arr))
    }
}

impl Objective for WingObjective<'_> {
    fn dim(&self) -> usize {
        6
    }

    fn evaluate(&self, x: &[f64]) -> Result<Sample, SurrogateError> {
        let phi = Self::split(x)?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let p = self.surrogate.predict(&phi.design(), &phi.inflow(), &self.atm)?;
        let c = p.coefficients;
        let value = c
            .eps
            .ok_or_else(|| SurrogateError::OutOfDomain("lift-to-drag ratio is unbounded (C_D = 0)".into()))?;
        Ok(Sample {
            value,
            c_d: Some(c.c_d),
            c_l: Some(c.c_l),
        })
    }

    fn evaluate_with_gradient(&self, x: &[f64]) -> Option<Result<(Sample, Vec<f64>), SurrogateError>> {
        if !self.analytic {
            return None;
        }
        let phi = match Self::split(x) {
            Ok(p) => p,
            Err(e) => return Some(Err(e)),
        };
        let result = self.surrogate.gradient(&phi.design(), &phi.inflow(), &self.atm)?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        Some(result.map(|g| {
            (
                Sample {
                    value: g.eps,
                    c_d: Some(g.c_d),
                    c_l: Some(g.c_l),
                },
                g.d_eps.to_vec(),
            )
        }))
    }

    fn evaluations(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

type GradFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a>;

type ScalarFn<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>;

/// A plain function as an [`Objective`], optionally with its gradient.
pub struct FnObjective<'a> {
    dim: usize,
    f: ScalarFn<'a>,
    grad: Option<GradFn<'a>>,
    calls: AtomicU64,
}

impl<'a> FnObjective<'a> {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + Sync + 'a) -> Self {
        Self {
            dim,
            f: Box::new(f),
            grad: None,
            calls: AtomicU64::new(0),
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Sync + 'a) -> Self {
        self.grad = Some(Box::new(g));
        self
    }

    /// `-‖x - center‖²`, maximized at `center`.
    pub fn concave_quadratic(center: Vec<f64>) -> Self {
        let c2 = center.clone();
        Self::new(center.len(), move |x| {
            -x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        })
        .with_gradient(move |x| x.iter().zip(&c2).map(|(a, b)| -2.0 * (a - b)).collect())
    }
}

impl Objective for FnObjective<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<Sample, SurrogateError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(Sample::scalar((self.f)(x)))
    }

    fn evaluate_with_gradient(&self, x: &[f64]) -> Option<Result<(Sample, Vec<f64>), SurrogateError>> {
        let g = self.grad.as_ref()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        Some(Ok((Sample::scalar((self.f)(x)), g(x))))
    }

    fn evaluations(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

/// Axis-aligned box in physical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, OptimizeError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(OptimizeError::InvalidConfig(
                "bounds need matching, non-empty lower and upper vectors".into(),
            ));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l <= h) {
                return Err(OptimizeError::InvalidConfig(format!(
                    "bound {i}: [{l}, {h}] is not a finite interval"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn from_space(space: &ParameterSpace) -> Self {
        Self {
            lo: space.lower().to_vec(),
            hi: space.upper().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    pub fn to_physical(&self, u: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| (self.lo[i] + u[i] * self.width(i)).clamp(self.lo[i], self.hi[i]))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let w = self.width(i);
                if w > 0.0 {
                    (x[i] - self.lo[i]) / w
                } else {
                    0.5
                }
            })
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && (0..self.dim()).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }
}

pub(crate) fn clamp_unit(u: &mut [f64]) {
    for v in u {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Finite-difference gradient in physical coordinates with per-axis step
/// `h · (hi − lo)`: central inside the box, one-sided at the faces. `f0` is
/// the value at `x` when already known.
pub fn finite_diff_gradient(
    objective: &dyn Objective,
    x: &[f64],
    bounds: &Bounds,
    h: f64,
    f0: Option<f64>,
) -> Result<Vec<f64>, SurrogateError> {
    let mut f0 = f0;
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let step = h * bounds.width(i);
        if step == 0.0 {
            continue;
        }
        let at = |v: f64| -> Result<f64, SurrogateError> {
            let mut p = x.to_vec();
            p[i] = v;
            Ok(objective.evaluate(&p)?.value)
        };
        let up_ok = x[i] + step <= bounds.hi[i];
        let dn_ok = x[i] - step >= bounds.lo[i];
        g[i] = if up_ok && dn_ok {
            (at(x[i] + step)? - at(x[i] - step)?) / (2.0 * step)
        } else {
            let base = match f0 {
                Some(v) => v,
                None => {
                    let v = objective.evaluate(x)?.value;
                    f0 = Some(v);
                    v
                }
            };
            if up_ok {
                (at(x[i] + step)? - base) / step
            } else {
                (base - at(x[i] - step)?) / step
            }
        };
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gradient,
    Evolutionary,
    Bayesian,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gradient" | "adam" => Ok(Self::Gradient),
            "evolutionary" | "cmaes" | "cma-es" => Ok(Self::Evolutionary),
            "bayesian" | "bayes" => Ok(Self::Bayesian),
            other => Err(format!("unknown method `{other}` (gradient, evolutionary, bayesian)")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Gradient => "gradient",
            Method::Evolutionary => "evolutionary",
            Method::Bayesian => "bayesian",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Objective evaluations, finite-difference probes included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<u64>,
    /// Optimizer iterations (gradient method only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_s: Option<f64>,
}

impl Budget {
    pub fn evaluations(n: u64) -> Self {
        Self {
            max_evaluations: Some(n),
            ..Default::default()
        }
    }

    pub fn steps(n: u64) -> Self {
        Self {
            max_steps: Some(n),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.max_evaluations == Some(0) || self.max_steps == Some(0) {
            return Err(OptimizeError::InvalidConfig("budget must be positive".into()));
        }
        if let Some(t) = self.wall_clock_s {
            if !(t > 0.0) {
                return Err(OptimizeError::InvalidConfig(
                    "wall-clock budget must be positive".into(),
                ));
            }
        }
        if self.max_evaluations.is_none() && self.max_steps.is_none() && self.wall_clock_s.is_none() {
            return Err(OptimizeError::InvalidConfig("no budget given".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub seed: u64,
    pub budget: Budget,
    #[serde(default)]
    pub adam: AdamParams,
    #[serde(default)]
    pub cmaes: CmaesParams,
    #[serde(default)]
    pub bayes: BayesParams,
}

impl OptimizerConfig {
    /// 900 steps (gradient), 2,700 evaluations (evolutionary) or 100
    /// evaluations (Bayesian).
    pub fn new(method: Method, seed: u64) -> Self {
        let budget = match method {
            Method::Gradient => Budget::steps(900),
            Method::Evolutionary => Budget::evaluations(2700),
            Method::Bayesian => Budget::evaluations(100),
        };
        Self {
            method,
            seed,
            budget,
            adam: AdamParams::default(),
            cmaes: CmaesParams::default(),
            bayes: BayesParams::default(),
        }
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    /// Checks the budget and the parameters of the selected method.
    pub fn validate(&self) -> Result<(), OptimizeError> {
        self.budget.validate()?;
        match self.method {
            Method::Gradient => self.adam.validate(),
            Method::Evolutionary => self.cmaes.validate(),
            Method::Bayesian => self.bayes.validate(self.budget),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Budget,
    Convergence,
    WallClock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: u64,
    pub phi: Vec<f64>,
    pub eps: f64,
    pub best_eps: f64,
    #[serde(rename = "C_D", default, skip_serializing_if = "Option::is_none")]
    pub c_d: Option<f64>,
    #[serde(rename = "C_l", default, skip_serializing_if = "Option::is_none")]
    pub c_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestCoefficients {
    #[serde(rename = "C_D")]
    pub c_d: f64,
    #[serde(rename = "C_l")]
    pub c_l: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub method: Method,
    pub seed: u64,
    pub budget: Budget,
    pub best_phi: Vec<f64>,
    pub best_eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<BestCoefficients>,
    pub trace: Vec<TraceEntry>,
    /// Objective calls, finite-difference probes included.
    pub evaluations: u64,
    /// Optimizer iterations (steps, generations or acquisitions).
    pub steps: u64,
    pub terminated_by: Termination,
}

impl OptimizationResult {
    pub fn parameter_names(&self) -> Option<[&'static str; 6]> {
        (self.best_phi.len() == 6).then_some(PARAMETER_NAMES)
    }

    pub fn write_trace_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string()];
        let dim = self.best_phi.len();
        if dim == 6 {
            header.extend(PARAMETER_NAMES.iter().map(|s| s.to_string()));
        } else {
            header.extend((0..dim).map(|i| format!("x{i}")));
        }
        header.extend(["eps", "best_eps", "note"].map(String::from));
        w.write_record(&header)?;
        for e in &self.trace {
            let mut row = vec![e.step.to_string()];
            row.extend(e.phi.iter().map(|v| v.to_string()));
            row.push(e.eps.to_string());
            row.push(e.best_eps.to_string());
            row.push(e.note.clone().unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trace bookkeeping shared by the optimizers.
pub(crate) struct Recorder<'a> {
    objective: &'a dyn Objective,
    bounds: &'a Bounds,
    budget: Budget,
    start: Instant,
    evals_at_start: u64,
    trace: Vec<TraceEntry>,
    best: Option<usize>,
    pending_note: Option<String>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(objective: &'a dyn Objective, bounds: &'a Bounds, budget: Budget) -> Result<Self, OptimizeError> {
        budget.validate()?;
        if objective.dim() != bounds.dim() {
            return Err(OptimizeError::InvalidConfig(format!(
                "objective has {} parameters, bounds have {}",
                objective.dim(),
                bounds.dim()
            )));
        }
        Ok(Self {
            objective,
            bounds,
            budget,
            start: Instant::now(),
            evals_at_start: objective.evaluations(),
            trace: Vec::new(),
            best: None,
            pending_note: None,
        })
    }

    pub(crate) fn evaluations(&self) -> u64 {
        self.objective.evaluations() - self.evals_at_start
    }

    pub(crate) fn fail(&self, source: SurrogateError) -> OptimizeError {
        OptimizeError::Objective {
            evaluations: self.evaluations(),
            source,
        }
    }

    pub(crate) fn evaluations_left(&self) -> Option<u64> {
        self.budget
            .max_evaluations
            .map(|m| m.saturating_sub(self.evaluations()))
    }

    pub(crate) fn out_of_time(&self) -> bool {
        self.budget
            .wall_clock_s
            .is_some_and(|t| self.start.elapsed().as_secs_f64() >= t)
    }

    pub(crate) fn note(&mut self, note: impl Into<String>) {
        self.pending_note = Some(note.into());
    }

    /// Evaluates at unit coordinates `u` and records the result.
    pub(crate) fn evaluate(&mut self, step: u64, u: &[f64]) -> Result<f64, OptimizeError> {
        debug_assert!(u.iter().all(|v| (0.0..=1.0).contains(v)));
        let x = self.bounds.to_physical(u);
        let s = self.objective.evaluate(&x).map_err(|e| self.fail(e))?;
        self.push(step, x, s);
        Ok(s.value)
    }

    pub(crate) fn push(&mut self, step: u64, phi: Vec<f64>, s: Sample) {
        debug_assert!(self.bounds.contains(&phi));
        let improved = self.best.is_none_or(|b| s.value > self.trace[b].eps);
        let best_eps = if improved {
            s.value
        } else {
            self.trace[self.best.unwrap()].best_eps
        };
        self.trace.push(TraceEntry {
            step,
            phi,
            eps: s.value,
            best_eps,
            c_d: s.c_d,
            c_l: s.c_l,
            note: self.pending_note.take(),
        });
        if improved {
            self.best = Some(self.trace.len() - 1);
        }
    }

    pub(crate) fn finish(
        self,
        method: Method,
        seed: u64,
        steps: u64,
        terminated_by: Termination,
    ) -> Result<OptimizationResult, OptimizeError> {
        let evaluations = self.evaluations();
        let b = self
            .best
            .ok_or_else(|| OptimizeError::Undefined("no evaluation fit in the budget".into()))?;
        let best = &self.trace[b];
        let coefficients = match (best.c_d, best.c_l) {
            (Some(c_d), Some(c_l)) => Some(BestCoefficients {
                c_d,
                c_l,
                eps: best.eps,
            }),
            _ => None,
        };
        Ok(OptimizationResult {
            method,
            seed,
            budget: self.budget,
            best_phi: best.phi.clone(),
            best_eps: best.eps,
            coefficients,
            evaluations,
            steps,
            terminated_by,
            trace: self.trace,
        })
    }
}

/// Runs the configured method.
pub fn optimize(
    objective: &dyn Objective,
    bounds: &Bounds,
    config: &OptimizerConfig,
) -> Result<OptimizationResult, OptimizeError> {
    match config.method {
        Method::Gradient => optimize_gradient(objective, bounds, config),
        Method::Evolutionary => optimize_cmaes(objective, bounds, config),
        Method::Bayesian => optimize_bayes(objective, bounds, config),
    }
}

/// Best of `n` seeded uniform samples; the reference for optimizer checks.
pub fn random_search(
    objective: &dyn Objective,
    bounds: &Bounds,
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64), OptimizeError> {
    use rand::{Rng, SeedableRng};
    use rayon::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..bounds.dim()).map(|_| rng.random::<f64>()).collect())
        .collect();
    let values: Vec<Result<f64, SurrogateError>> = points
        .par_iter()
        .map(|u| objective.evaluate(&bounds.to_physical(u)).map(|s| s.value))
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        let v = v.map_err(|source| OptimizeError::Objective {
            evaluations: objective.evaluations(),
            source,
        })?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (i, v) = best.ok_or_else(|| OptimizeError::InvalidConfig("n must be positive".into()))?;
    Ok((bounds.to_physical(&points[i]), v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::LiftLine;

    #[test]
    fn finite_differences_on_simple_functions() {
        let b = Bounds::new(vec![-1.0; 3], vec![1.0; 3]).unwrap();
        let sq = FnObjective::new(3, |x| x.iter().map(|v| v * v).sum());
        let g = finite_diff_gradient(&sq, &[0.0; 3], &b, 1e-4, None).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-10));
        let c = [0.5, -2.0, 3.25];
        let lin = FnObjective::new(3, move |x| x.iter().zip(c).map(|(a, b)| a * b).sum());
        for x in [[0.1, 0.2, -0.3], [1.0, -1.0, 0.99999]] {
            let g = finite_diff_gradient(&lin, &x, &b, 1e-4, None).unwrap();
            for (gi, ci) in g.iter().zip(c) {
                assert!((gi - ci).abs() < 1e-9, "{g:?}");
            }
        }
    }

    #[test]
    fn zero_incidence_has_zero_efficiency() {
        let model = LiftLine::default();
        let obj = WingObjective::new(&model, Atmosphere::isa_sea_level());
        let s = obj.evaluate(&[1.0, 1.2, 0.5, 20.0, 200.0, 0.0]).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(obj.evaluations(), 1);
    }

    #[test]
    fn analytic_gradient_agrees_with_finite_differences() {
        use rand::{Rng, SeedableRng};
        let model = LiftLine::default();
        let obj = WingObjective::new(&model, Atmosphere::isa_sea_level());
        let bounds = Bounds::from_space(&ParameterSpace::default());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let u: Vec<f64> = (0..6).map(|_| rng.random_range(0.05..0.95)).collect();
            let x = bounds.to_physical(&u);
            let (_, g) = obj.evaluate_with_gradient(&x).unwrap().unwrap();
            let fd = finite_diff_gradient(&obj, &x, &bounds, 1e-4, None).unwrap();
            // compare in normalized units so every axis has the same scale
            let gu: Vec<f64> = (0..6).map(|i| g[i] * bounds.width(i)).collect();
            let fu: Vec<f64> = (0..6).map(|i| fd[i] * bounds.width(i)).collect();
            let scale = fu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..6 {
                let err = (gu[i] - fu[i]).abs() / fu[i].abs().max(1e-3 * scale);
                assert!(err < 1e-4, "axis {i}: {} vs {}", g[i], fd[i]);
            }
        }
    }

    #[test]
    fn bayesian_optimum_sits_on_four_faces() {
        let space = ParameterSpace::default();
        let phi = [0.700, 1.500, 0.400, 40.00, 212.4, 4.664];
        let ivs = space.intervals();
        let on_face = (0..6).filter(|&i| phi[i] == ivs[i].lo || phi[i] == ivs[i].hi).count();
        assert_eq!(on_face, 4);
        assert!(space.contains(&DesignVector(phi)));
    }

    #[test]
    fn counting_includes_probes() {
        let model = LiftLine::default();
        let obj = WingObjective::new(&model, Atmosphere::isa_sea_level()).without_analytic_gradient();
        assert!(obj.evaluate_with_gradient(&[1.0, 1.2, 0.5, 20.0, 200.0, 2.0]).is_none());
        let bounds = Bounds::from_space(&ParameterSpace::default());
        finite_diff_gradient(&obj, &[1.0, 1.2, 0.5, 20.0, 200.0, 2.0], &bounds, 1e-4, None).unwrap();
        assert_eq!(obj.evaluations(), 12);
    }
}
