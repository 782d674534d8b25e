use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wingforge::space::{DesignVector, ParameterSpace};
use wingforge::surrogate::{liftline_gradient, liftline_predict, LiftLineParams};
use wingforge::Atmosphere;

fn coefficients(phi: &[f64; 6]) -> [f64; 3] {
    let v = DesignVector(*phi);
    let p = liftline_predict(
        &v.design(),
        &v.inflow(),
        &Atmosphere::isa_sea_level(),
        &LiftLineParams::default(),
    )
    .unwrap()
    .coefficients;
    [p.c_l, p.c_d, p.eps.unwrap()]
}

#[test]
fn gradient_matches_central_differences() {
    let space = ParameterSpace::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let unit: [f64; 6] = std::array::from_fn(|_| rng.random_range(0.02..0.98));
        let phi = space.denormalize(&unit).0;
        let v = DesignVector(phi);
        let g = liftline_gradient(
            &v.design(),
            &v.inflow(),
            &Atmosphere::isa_sea_level(),
            &LiftLineParams::default(),
        )
        .unwrap();
        for i in 0..6 {
            let h = 1e-6 * phi[i].abs().max(1.0);
            let mut up = phi;
            let mut dn = phi;
            up[i] += h;
            dn[i] -= h;
            let (fu, fd) = (coefficients(&up), coefficients(&dn));
            let analytic = [g.d_c_l[i], g.d_c_d[i], g.d_eps[i]];
            for k in 0..3 {
                let numeric = (fu[k] - fd[k]) / (2.0 * h);
                let scale = numeric.abs().max(1e-6 * [1.0, 0.1, 10.0][k]);
                worst = worst.max((analytic[k] - numeric).abs() / scale);
            }
        }
    }
    assert!(worst < 1e-5, "max relative error {worst:e}");
}
