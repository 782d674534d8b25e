use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::aero::{
    coefficients, flow_directions, integrate_forces, lift_to_drag, AeroCoefficients, Atmosphere, InflowConditions,
    SurfaceField,
};
use crate::geometry::{loft_wing, planform_area, MeshResolution, TriMesh, Vec3, WingDesign};

use super::{CoefficientGradient, Prediction, Provenance, Surrogate, SurrogateError};

/// Upper limit of the normal Mach number `M cos Λ`.
pub const MACH_DIVERGENCE: f64 = 0.999;

const DEG: f64 = PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftLineParams {
    /// Section lift slope per radian.
    pub a0: f64,
    pub e_oswald: f64,
    #[serde(rename = "CL_max")]
    pub cl_max: f64,
    #[serde(rename = "CD0_k")]
    pub cd0_k: f64,
    pub wetted_factor: f64,
    #[serde(rename = "M_crit")]
    pub m_crit: f64,
    pub wave_k: f64,
}

impl Default for LiftLineParams {
    fn default() -> Self {
        Self {
            a0: 2.0 * PI,
            e_oswald: 0.9,
            cl_max: 1.2,
            cd0_k: 0.074,
            wetted_factor: 2.05,
            m_crit: 0.7,
            wave_k: 20.0,
        }
    }
}

impl LiftLineParams {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        let all = [
            ("a0", self.a0),
            ("e_oswald", self.e_oswald),
            ("CL_max", self.cl_max),
            ("CD0_k", self.cd0_k),
            ("wetted_factor", self.wetted_factor),
            ("M_crit", self.m_crit),
            ("wave_k", self.wave_k),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(SurrogateError::InvalidInput(format!(
                    "lifting-line parameter {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Model outputs with their derivatives with respect to
/// `(c_r, b, λ, Λ_deg, U∞, α_deg)`.
#[derive(Debug, Clone, Copy)]
struct Evaluation {
    cl: f64,
    cd: f64,
    d_cl: [f64; 6],
    d_cd: [f64; 6],
}

fn scaled(v: [f64; 6], k: f64) -> [f64; 6] {
    v.map(|x| x * k)
}

fn combine(a: [f64; 6], ka: f64, b: [f64; 6], kb: f64) -> [f64; 6] {
    std::array::from_fn(|i| ka * a[i] + kb * b[i])
}

fn evaluate(
    design: &WingDesign,
    inflow: &InflowConditions,
    atm: &Atmosphere,
    p: &LiftLineParams,
) -> Result<Evaluation, SurrogateError> {
    design.validate()?;
    inflow.validate()?;
    atm.validate()?;
    p.validate()?;
    let (c_r, b, lam) = (design.c_r, design.b, design.taper);
    let u = inflow.u_inf;
    let sweep = design.sweep_rad();
    let alpha = inflow.alpha_deg * DEG;
    let mut d_alpha = [0.0; 6];
    d_alpha[5] = DEG;

    // Aspect ratio of the reflected wing: 2b² / S with S = b c_r (1 + λ) / 2.
    let ar = 4.0 * b / (c_r * (1.0 + lam));
    let d_ar = [-ar / c_r, ar / b, -ar / (1.0 + lam), 0.0, 0.0, 0.0];
    let k = PI * p.e_oswald * ar;
    let d_k = scaled(d_ar, PI * p.e_oswald);

    let sound = atm.speed_of_sound();
    let mach = u / sound;
    let cos_sweep = sweep.cos();
    let mc = mach * cos_sweep;
    if mc >= MACH_DIVERGENCE {
        return Err(SurrogateError::OutOfDomain(format!(
            "normal Mach number M cos(Lambda) = {mc:.4} reaches the divergence limit {MACH_DIVERGENCE}"
        )));
    }
    let mut d_mc = [0.0; 6];
    d_mc[3] = -mach * sweep.sin() * DEG;
    d_mc[4] = cos_sweep / sound;

    let beta = (1.0 - mc * mc).sqrt();
    let d_beta = scaled(d_mc, -mc / beta);
    let a_eff = p.a0 * cos_sweep / beta;
    let mut d_cos = [0.0; 6];
    d_cos[3] = -sweep.sin() * DEG;
    let d_a = combine(d_cos, p.a0 / beta, d_beta, -a_eff / beta);

    // CL_lin = a α k / (k + a)
    let den = k + a_eff;
    let slope = a_eff * k / den;
    let cl_lin = slope * alpha;
    let d_slope = combine(d_a, k * k / (den * den), d_k, a_eff * a_eff / (den * den));
    let d_cl_lin = combine(d_slope, alpha, d_alpha, slope);

    let th = (cl_lin / p.cl_max).tanh();
    let cl = p.cl_max * th;
    let d_cl = scaled(d_cl_lin, 1.0 - th * th);

    // Reynolds number on the mean geometric chord.
    let chord = 0.5 * c_r * (1.0 + lam);
    let re = atm.rho * u * chord / atm.mu;
    let d_re = [re / c_r, 0.0, re / (1.0 + lam), 0.0, re / u, 0.0];
    let cd0 = p.wetted_factor * p.cd0_k / re.powf(0.2);
    let d_cd0 = scaled(d_re, -0.2 * cd0 / re);

    let induced = cl * cl / k;
    let d_induced = combine(d_cl, 2.0 * cl / k, d_k, -induced / k);

    let excess = (mc - p.m_crit).max(0.0);
    let wave = p.wave_k * excess.powi(4);
    let d_wave = scaled(d_mc, 4.0 * p.wave_k * excess.powi(3));

    let cd = cd0 + induced + wave;
    let d_cd = std::array::from_fn(|i| d_cd0[i] + d_induced[i] + d_wave[i]);
    Ok(Evaluation { cl, cd, d_cl, d_cd })
}

fn provenance() -> Provenance {
    Provenance {
        surrogate: "builtin-liftline".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    }
}

/// Coefficients of the analytic model, referenced to the planform area of the
/// half-wing.
pub fn liftline_predict(
    design: &WingDesign,
    inflow: &InflowConditions,
    atm: &Atmosphere,
    params: &LiftLineParams,
) -> Result<Prediction, SurrogateError> {
    let ev = evaluate(design, inflow, atm, params)?;
    let q = 0.5 * atm.rho * inflow.u_inf * inflow.u_inf;
    let s = planform_area(design);
    let (e_drag, e_lift) = flow_directions(inflow.alpha_deg);
    let force = (ev.cd * e_drag + ev.cl * e_lift) * q * s;
    Ok(Prediction {
        coefficients: AeroCoefficients {
            force: force.into(),
            f_drag: ev.cd * q * s,
            f_lift: ev.cl * q * s,
            c_d: ev.cd,
            c_l: ev.cl,
            eps: lift_to_drag(ev.cd, ev.cl),
            pressure_part: force.into(),
            friction_part: [0.0; 3],
        },
        surface_field: None,
        field_resolution: None,
        provenance: provenance(),
        retries: 0,
    })
}

pub fn liftline_gradient(
    design: &WingDesign,
    inflow: &InflowConditions,
    atm: &Atmosphere,
    params: &LiftLineParams,
) -> Result<CoefficientGradient, SurrogateError> {
    let ev = evaluate(design, inflow, atm, params)?;
    let cd2 = ev.cd * ev.cd;
    Ok(CoefficientGradient {
        c_l: ev.cl,
        c_d: ev.cd,
        eps: ev.cl / ev.cd,
        d_c_l: ev.d_cl,
        d_c_d: ev.d_cd,
        d_eps: std::array::from_fn(|i| (ev.d_cl[i] * ev.cd - ev.cl * ev.d_cd[i]) / cd2),
    })
}

/// Builds a surface field on `mesh` whose integral has the requested drag and
/// lift. Pressure follows `-n_z` and shear follows the freestream direction
/// projected onto each face; their two amplitudes are solved for exactly.
pub fn synthesize_field(
    mesh: &TriMesh,
    inflow: &InflowConditions,
    atm: &Atmosphere,
    f_drag: f64,
    f_lift: f64,
) -> Result<SurfaceField, SurrogateError> {
    let q = 0.5 * atm.rho * inflow.u_inf * inflow.u_inf;
    let (e_drag, e_lift) = flow_directions(inflow.alpha_deg);
    let faces = mesh.faces();
    let tangents: Vec<Vec3> = faces
        .iter()
        .map(|f| {
            let t = e_drag - e_drag.dot(&f.normal) * f.normal;
            let n = t.norm();
            if n > 1e-12 {
                t / n
            } else {
                Vec3::zeros()
            }
        })
        .collect();
    // Force per unit amplitude of each pattern.
    let mut fp = Vec3::zeros();
    let mut ft = Vec3::zeros();
    for (f, t) in faces.iter().zip(&tangents) {
        fp += q * f.normal.z * f.area * f.normal;
        ft += q * f.area * t;
    }
    let (m11, m12) = (fp.dot(&e_drag), ft.dot(&e_drag));
    let (m21, m22) = (fp.dot(&e_lift), ft.dot(&e_lift));
    let det = m11 * m22 - m12 * m21;
    if det.abs() < 1e-12 * (m11.abs() + m12.abs()) * (m21.abs() + m22.abs()) {
        return Err(SurrogateError::InvalidInput(
            "surface too degenerate to carry a synthetic field".into(),
        ));
    }
    let a = (f_drag * m22 - m12 * f_lift) / det;
    let c = (m11 * f_lift - m21 * f_drag) / det;
    Ok(SurfaceField {
        p_s: faces.iter().map(|f| atm.p_inf - q * a * f.normal.z).collect(),
        tau: tangents.iter().map(|t| (q * c * t).into()).collect(),
    })
}

/// The analytic model as a [`Surrogate`], optionally emitting surface fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct LiftLine {
    pub params: LiftLineParams,
    pub fields: Option<MeshResolution>,
}

impl LiftLine {
    pub fn new(params: LiftLineParams) -> Self {
        Self { params, fields: None }
    }

    pub fn with_fields(mut self, resolution: MeshResolution) -> Self {
        self.fields = Some(resolution);
        self
    }
}

impl Surrogate for LiftLine {
    fn provenance(&self) -> Provenance {
        provenance()
    }

    fn predict(
        &self,
        design: &WingDesign,
        inflow: &InflowConditions,
        atm: &Atmosphere,
    ) -> Result<Prediction, SurrogateError> {
        let mut pred = liftline_predict(design, inflow, atm, &self.params)?;
        if let Some(res) = self.fields {
            let mesh = loft_wing(design, &res)?;
            let c = &pred.coefficients;
            let field = synthesize_field(&mesh, inflow, atm, c.f_drag, c.f_lift)?;
            let forces = integrate_forces(&mesh, &field, atm.p_inf)?;
            pred.coefficients = coefficients(&forces, inflow, atm, planform_area(design))?;
            pred.surface_field = Some(field);
            pred.field_resolution = Some(res);
        }
        Ok(pred)
    }

    fn gradient(
        &self,
        design: &WingDesign,
        inflow: &InflowConditions,
        atm: &Atmosphere,
    ) -> Option<Result<CoefficientGradient, SurrogateError>> {
        Some(liftline_gradient(design, inflow, atm, &self.params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn isa() -> Atmosphere {
        Atmosphere::isa_sea_level()
    }

    fn wing() -> WingDesign {
        WingDesign::new(0.9, 1.3, 0.55, 20.0).unwrap()
    }

    fn predict(d: &WingDesign, u: f64, alpha: f64, p: &LiftLineParams) -> AeroCoefficients {
        let inflow = InflowConditions::new(u, alpha).unwrap();
        liftline_predict(d, &inflow, &isa(), p).unwrap().coefficients
    }

    #[test]
    fn zero_incidence_has_no_lift() {
        let p = LiftLineParams::default();
        let c = predict(&wing(), 200.0, 0.0, &p);
        assert_eq!(c.c_l, 0.0);
        let re = 1.225 * 200.0 * 0.5 * 0.9 * 1.55 / 1.7894e-5;
        let cd0 = 2.05 * 0.074 / f64::powf(re, 0.2);
        let mc = 200.0 / isa().speed_of_sound() * 20f64.to_radians().cos();
        let wave = 20.0 * (mc - 0.7).max(0.0).powi(4);
        assert!((c.c_d - (cd0 + wave)).abs() < 1e-15);
    }

    #[test]
    fn odd_lift_even_drag() {
        let p = LiftLineParams::default();
        for alpha in [0.5, 3.0, 7.5, 10.0] {
            let up = predict(&wing(), 240.0, alpha, &p);
            let dn = predict(&wing(), 240.0, -alpha, &p);
            assert_eq!(up.c_l, -dn.c_l);
            assert_eq!(up.c_d, dn.c_d);
        }
    }

    #[test]
    fn induced_drag_identity() {
        let p = LiftLineParams {
            e_oswald: 1.0,
            ..Default::default()
        };
        let d = wing();
        let ar = 2.0 * d.b * d.b / planform_area(&d);
        let c = predict(&d, 150.0, 2.0, &p);
        let c0 = predict(&d, 150.0, 0.0, &p);
        let induced = c.c_d - c0.c_d;
        assert!((induced - c.c_l * c.c_l / (PI * ar)).abs() < 1e-12);
    }

    #[test]
    fn lift_grows_through_the_linear_range() {
        let p = LiftLineParams::default();
        let d = wing();
        let u = 0.3 * isa().speed_of_sound();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=60 {
            let cl = predict(&d, u, i as f64 * 0.1, &p).c_l;
            assert!(cl > prev);
            prev = cl;
        }
        let ar = 2.0 * d.b * d.b / planform_area(&d);
        let mc = 0.3 * d.sweep_rad().cos();
        let a_eff = p.a0 * d.sweep_rad().cos() / (1.0 - mc * mc).sqrt();
        let slope = a_eff / (1.0 + a_eff / (PI * p.e_oswald * ar));
        let h = 1e-4;
        let fd = (predict(&d, u, h, &p).c_l - predict(&d, u, -h, &p).c_l) / (2.0 * h * DEG);
        assert!((fd - slope).abs() < 1e-6 * slope, "{fd} vs {slope}");
    }

    #[test]
    fn lift_is_bounded_by_cl_max() {
        let p = LiftLineParams::default();
        let c = predict(&WingDesign::new(1.2, 1.5, 0.7, 0.0).unwrap(), 150.0, 40.0, &p);
        assert!(c.c_l < p.cl_max && c.c_l > 0.95 * p.cl_max);
    }

    #[test]
    fn divergence_limit_is_out_of_domain() {
        let d = WingDesign::new(1.0, 1.0, 0.5, 0.0).unwrap();
        let inflow = InflowConditions::new(isa().speed_of_sound(), 2.0).unwrap();
        let p = LiftLineParams::default();
        assert!(matches!(
            liftline_predict(&d, &inflow, &isa(), &p),
            Err(SurrogateError::OutOfDomain(_))
        ));
        assert!(matches!(
            liftline_gradient(&d, &inflow, &isa(), &p),
            Err(SurrogateError::OutOfDomain(_))
        ));
    }

    #[test]
    fn root_chord_lowers_lift_through_aspect_ratio() {
        let d = WingDesign::new(1.0, 1.2, 1.0, 15.0).unwrap();
        let inflow = InflowConditions::new(200.0, 4.0).unwrap();
        let g = liftline_gradient(&d, &inflow, &isa(), &LiftLineParams::default()).unwrap();
        // c_r only enters through AR (and Re, which does not touch C_l)
        assert!(g.d_c_l[0] < 0.0);
    }

    #[test]
    fn alpha_derivative_at_zero_is_lift_slope() {
        let d = wing();
        let inflow = InflowConditions::new(180.0, 0.0).unwrap();
        let p = LiftLineParams::default();
        let g = liftline_gradient(&d, &inflow, &isa(), &p).unwrap();
        let ar = 4.0 * d.b / (d.c_r * (1.0 + d.taper));
        let mc = 180.0 / isa().speed_of_sound() * d.sweep_rad().cos();
        let a_eff = p.a0 * d.sweep_rad().cos() / (1.0 - mc * mc).sqrt();
        let slope = a_eff / (1.0 + a_eff / (PI * p.e_oswald * ar));
        assert!((g.d_c_l[5] - slope * DEG).abs() < 1e-14);
    }

    #[test]
    fn synthetic_field_reproduces_coefficients() {
        let model = LiftLine::default().with_fields(MeshResolution::new(24, 10));
        let d = wing();
        for alpha in [-8.0, 0.0, 3.0, 9.0] {
            let inflow = InflowConditions::new(230.0, alpha).unwrap();
            let with = model.predict(&d, &inflow, &isa()).unwrap();
            let plain = liftline_predict(&d, &inflow, &isa(), &model.params).unwrap();
            let field = with.surface_field.as_ref().unwrap();
            let mesh = loft_wing(&d, &MeshResolution::new(24, 10)).unwrap();
            let f = integrate_forces(&mesh, field, isa().p_inf).unwrap();
            let again = coefficients(&f, &inflow, &isa(), planform_area(&d)).unwrap();
            assert_eq!(again, with.coefficients);
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
            assert!(rel(with.coefficients.c_d, plain.coefficients.c_d) < 1e-9);
            if alpha != 0.0 {
                assert!(rel(with.coefficients.c_l, plain.coefficients.c_l) < 1e-9);
            } else {
                assert!(with.coefficients.c_l.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repeated_calls_are_bitwise_identical() {
        let inflow = InflowConditions::new(275.0, 6.5).unwrap();
        let first = liftline_predict(&wing(), &inflow, &isa(), &LiftLineParams::default()).unwrap();
        let handles: Vec<_> = (0..4)
            .map(|_| {
                std::thread::spawn(move || {
                    liftline_predict(&wing(), &inflow, &isa(), &LiftLineParams::default()).unwrap()
                })
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), first);
        }
    }
}
