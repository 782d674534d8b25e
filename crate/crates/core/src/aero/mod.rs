//! Freestream state, surface force integration and aerodynamic coefficients.
//!
//! Forces follow the usual convention: the fluid loads a closed surface by
//! gauge pressure acting against the outward normal plus the wall shear
//! stress, integrated face by face. Drag and lift are projections onto the
//! freestream direction and its normal in the x-z plane.

mod section;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{TriMesh, Vec3};

pub use section::{section_profile, SectionProfile};

#[derive(Debug, Error, PartialEq)]
pub enum AeroError {
    #[error("{field} has {found} entries but the mesh has {expected} faces")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{field}[{index}] is not finite")]
    NonFinite { field: &'static str, index: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no faces in the spanwise band around y/b = {0}; refine the mesh")]
    EmptyBand(f64),
}

/// Freestream speed (m/s) and angle of attack (degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InflowConditions {
    #[serde(rename = "U_inf")]
    pub u_inf: f64,
    #[serde(rename = "alpha")]
    pub alpha_deg: f64,
}

impl InflowConditions {
    pub fn new(u_inf: f64, alpha_deg: f64) -> Result<Self, AeroError> {
        let inflow = Self { u_inf, alpha_deg };
        inflow.validate()?;
        Ok(inflow)
    }

    pub fn validate(&self) -> Result<(), AeroError> {
        if !(self.u_inf.is_finite() && self.u_inf > 0.0) {
            return Err(AeroError::InvalidInput("U_inf must be positive".into()));
        }
        if !self.alpha_deg.is_finite() {
            return Err(AeroError::InvalidInput("alpha must be finite".into()));
        }
        Ok(())
    }
}

/// Thermodynamic state of the undisturbed air.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atmosphere {
    /// kg/m³
    pub rho: f64,
    /// Pa
    pub p_inf: f64,
    /// K
    pub temperature: f64,
    pub gamma: f64,
    /// J/(kg K)
    pub r_gas: f64,
    /// Pa s
    pub mu: f64,
}

impl Atmosphere {
    /// ISA sea level.
    pub const fn isa_sea_level() -> Self {
        Self {
            rho: 1.225,
            p_inf: 101_325.0,
            temperature: 288.15,
            gamma: 1.4,
            r_gas: 287.05,
            mu: 1.7894e-5,
        }
    }

    pub fn speed_of_sound(&self) -> f64 {
        (self.gamma * self.r_gas * self.temperature).sqrt()
    }

    pub fn validate(&self) -> Result<(), AeroError> {
        let all = [self.rho, self.p_inf, self.temperature, self.gamma, self.r_gas, self.mu];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(AeroError::InvalidInput("atmosphere properties must be positive".into()))
        }
    }
}

impl Default for Atmosphere {
    fn default() -> Self {
        Self::isa_sea_level()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreestreamState {
    pub mach: f64,
    /// Based on the reference length passed to [`freestream_state`].
    pub reynolds: f64,
    pub dynamic_pressure: f64,
    pub e_drag: Vec3,
    pub e_lift: Vec3,
}

pub fn freestream_state(inflow: &InflowConditions, atm: &Atmosphere, c_ref: f64) -> Result<FreestreamState, AeroError> {
    inflow.validate()?;
    atm.validate()?;
    if !(c_ref > 0.0) {
        return Err(AeroError::InvalidInput("reference length must be positive".into()));
    }
    let (e_drag, e_lift) = flow_directions(inflow.alpha_deg);
    Ok(FreestreamState {
        mach: inflow.u_inf / atm.speed_of_sound(),
        reynolds: atm.rho * inflow.u_inf * c_ref / atm.mu,
        dynamic_pressure: 0.5 * atm.rho * inflow.u_inf * inflow.u_inf,
        e_drag,
        e_lift,
    })
}

/// Drag and lift unit vectors for an angle of attack in degrees.
///
/// `e_drag` is the freestream direction `(cos α, 0, sin α)` and
/// `e_lift = e_drag × ŷ`.
pub fn flow_directions(alpha_deg: f64) -> (Vec3, Vec3) {
    let (sin, cos) = alpha_deg.to_radians().sin_cos();
    let u = Vec3::new(cos, 0.0, sin);
    let e_drag = u / u.norm();
    let e_lift = e_drag.cross(&Vec3::y());
    (e_drag, e_lift)
}

/// Per-face surface pressure (Pa) and wall shear-stress vector (Pa).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SurfaceField {
    pub p_s: Vec<f64>,
    pub tau: Vec<[f64; 3]>,
}

impl SurfaceField {
    /// Uniform pressure, no shear.
    pub fn uniform(faces: usize, p: f64) -> Self {
        Self {
            p_s: vec![p; faces],
            tau: vec![[0.0; 3]; faces],
        }
    }

    pub fn len(&self) -> usize {
        self.p_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_s.is_empty()
    }

    pub fn validate(&self, faces: usize) -> Result<(), AeroError> {
        if self.p_s.len() != faces {
            return Err(AeroError::LengthMismatch {
                field: "p_s",
                expected: faces,
                found: self.p_s.len(),
            });
        }
        if self.tau.len() != faces {
            return Err(AeroError::LengthMismatch {
                field: "tau",
                expected: faces,
                found: self.tau.len(),
            });
        }
        if let Some(index) = self.p_s.iter().position(|p| !p.is_finite()) {
            return Err(AeroError::NonFinite { field: "p_s", index });
        }
        if let Some(index) = self.tau.iter().position(|t| t.iter().any(|c| !c.is_finite())) {
            return Err(AeroError::NonFinite { field: "tau", index });
        }
        Ok(())
    }
}

/// Integrated surface force split into pressure and friction parts (N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceBreakdown {
    pub total: Vec3,
    pub pressure: Vec3,
    pub friction: Vec3,
}

impl ForceBreakdown {
    pub fn from_parts(pressure: Vec3, friction: Vec3) -> Self {
        Self {
            total: pressure + friction,
            pressure,
            friction,
        }
    }
}

/// `F = Σ_f [-(p_s - p_inf) n_f + τ_f] A_f` over the faces of `mesh`.
pub fn integrate_forces(mesh: &TriMesh, field: &SurfaceField, p_inf: f64) -> Result<ForceBreakdown, AeroError> {
    field.validate(mesh.face_count())?;
    let mut pressure = Vec3::zeros();
    let mut friction = Vec3::zeros();
    for f in 0..mesh.face_count() {
        let face = mesh.face(f);
        pressure -= (field.p_s[f] - p_inf) * face.area * face.normal;
        friction += face.area * Vec3::from(field.tau[f]);
    }
    Ok(ForceBreakdown::from_parts(pressure, friction))
}

/// Force and its nondimensional projections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeroCoefficients {
    #[serde(rename = "F")]
    pub force: [f64; 3],
    #[serde(rename = "F_drag")]
    pub f_drag: f64,
    #[serde(rename = "F_lift")]
    pub f_lift: f64,
    #[serde(rename = "C_D")]
    pub c_d: f64,
    #[serde(rename = "C_l")]
    pub c_l: f64,
    /// Lift-to-drag ratio `C_l / C_D`; `None` (unbounded) when `C_D = 0`.
    pub eps: Option<f64>,
    pub pressure_part: [f64; 3],
    pub friction_part: [f64; 3],
}

/// `C_l / C_D`, or `None` when the drag coefficient is exactly zero.
pub fn lift_to_drag(c_d: f64, c_l: f64) -> Option<f64> {
    if c_d == 0.0 {
        None
    } else {
        Some(c_l / c_d)
    }
}

pub fn coefficients(
    forces: &ForceBreakdown,
    inflow: &InflowConditions,
    atm: &Atmosphere,
    a_ref: f64,
) -> Result<AeroCoefficients, AeroError> {
    inflow.validate()?;
    if !(a_ref > 0.0 && a_ref.is_finite()) {
        return Err(AeroError::InvalidInput("A_ref must be positive".into()));
    }
    let (e_drag, e_lift) = flow_directions(inflow.alpha_deg);
    let f_drag = forces.total.dot(&e_drag);
    let f_lift = forces.total.dot(&e_lift);
    let norm = atm.rho * inflow.u_inf * inflow.u_inf * a_ref;
    let c_d = 2.0 * f_drag / norm;
    let c_l = 2.0 * f_lift / norm;
    Ok(AeroCoefficients {
        force: forces.total.into(),
        f_drag,
        f_lift,
        c_d,
        c_l,
        eps: lift_to_drag(c_d, c_l),
        pressure_part: forces.pressure.into(),
        friction_part: forces.friction.into(),
    })
}

/// Per-face pressure and skin-friction coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCoefficients {
    #[serde(rename = "C_p")]
    pub c_p: Vec<f64>,
    #[serde(rename = "C_f")]
    pub c_f: Vec<f64>,
}

/// `C_p = (p_s - p_inf) / q`, `C_f = |τ| / q`.
pub fn surface_coefficients(field: &SurfaceField, atm: &Atmosphere, inflow: &InflowConditions) -> SurfaceCoefficients {
    let q = 0.5 * atm.rho * inflow.u_inf * inflow.u_inf;
    SurfaceCoefficients {
        c_p: field.p_s.iter().map(|p| (p - atm.p_inf) / q).collect(),
        c_f: field.tau.iter().map(|t| Vec3::from(*t).norm() / q).collect(),
    }
}
