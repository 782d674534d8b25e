use wingforge::optimize::{
    optimize, random_search, Bounds, Budget, FnObjective, Method, Objective, OptimizationResult, OptimizerConfig,
    WingObjective,
};
use wingforge::space::ParameterSpace;
use wingforge::surrogate::LiftLine;
use wingforge::Atmosphere;

const METHODS: [Method; 3] = [Method::Gradient, Method::Evolutionary, Method::Bayesian];

fn assert_monotone(r: &OptimizationResult) {
    assert!(r.trace.windows(2).all(|w| w[1].best_eps >= w[0].best_eps));
    let max = r.trace.iter().map(|e| e.eps).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(r.best_eps, max);
    assert_eq!(r.trace.last().unwrap().best_eps, max);
}

#[test]
fn all_methods_agree_on_concave_quadratic() {
    let target = vec![0.62, 0.35, 0.5, 0.81, 0.27, 0.44];
    let bounds = Bounds::new(vec![0.0; 6], vec![1.0; 6]).unwrap();
    for method in METHODS {
        let obj = FnObjective::concave_quadratic(target.clone());
        let cfg = match method {
            Method::Gradient => OptimizerConfig::new(method, 1).with_budget(Budget::steps(2000)),
            _ => OptimizerConfig::new(method, 1),
        };
        let r = optimize(&obj, &bounds, &cfg).unwrap();
        let err = r
            .best_phi
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-2, "{method}: {:?} off by {err}", r.best_phi);
        assert_monotone(&r);
    }
}

#[test]
fn liftline_optima_match_random_search() {
    let model = LiftLine::default();
    let atm = Atmosphere::isa_sea_level();
    let space = ParameterSpace::default();
    let bounds = Bounds::from_space(&space);
    let oracle = WingObjective::new(&model, atm);
    let (_, reference) = random_search(&oracle, &bounds, 100_000, 2024).unwrap();
    for (method, tolerance) in [
        (Method::Gradient, 0.02),
        (Method::Evolutionary, 0.02),
        (Method::Bayesian, 0.03),
    ] {
        let obj = WingObjective::new(&model, atm);
        let cfg = OptimizerConfig::new(method, 7);
        let r = optimize(&obj, &bounds, &cfg).unwrap();
        println!(
            "{method}: eps {:.4} vs random search {reference:.4}, {} evaluations, phi {:?}",
            r.best_eps, r.evaluations, r.best_phi
        );
        assert!(r.best_eps >= (1.0 - tolerance) * reference, "{method}");
        assert_eq!(r.evaluations, obj.evaluations());
        assert!(r.trace.iter().all(|e| bounds.contains(&e.phi)));
        assert_monotone(&r);
    }
}

#[test]
fn seeded_reruns_are_identical() {
    let model = LiftLine::default();
    let bounds = Bounds::from_space(&ParameterSpace::default());
    for method in METHODS {
        let cfg = OptimizerConfig::new(method, 99).with_budget(match method {
            Method::Gradient => Budget::steps(200),
            Method::Evolutionary => Budget::evaluations(450),
            Method::Bayesian => Budget::evaluations(30),
        });
        let run = || {
            let obj = WingObjective::new(&model, Atmosphere::isa_sea_level());
            serde_json::to_string(&optimize(&obj, &bounds, &cfg).unwrap()).unwrap()
        };
        assert_eq!(run(), run(), "{method}");
    }
}

#[test]
fn finite_difference_gradient_path_also_converges() {
    let model = LiftLine::default();
    let bounds = Bounds::from_space(&ParameterSpace::default());
    let analytic = WingObjective::new(&model, Atmosphere::isa_sea_level());
    let numeric = WingObjective::new(&model, Atmosphere::isa_sea_level()).without_analytic_gradient();
    let cfg = OptimizerConfig::new(Method::Gradient, 0);
    let a = optimize(&analytic, &bounds, &cfg).unwrap();
    let b = optimize(&numeric, &bounds, &cfg).unwrap();
    assert!((a.best_eps - b.best_eps).abs() < 1e-3 * a.best_eps);
    assert_eq!(b.evaluations, numeric.evaluations());
    assert!(b.evaluations > b.steps);
}
