//! Surrogate evaluation contract and its two backends.
//!
//! [`LiftLine`] is an analytic swept-wing model that answers instantly and
//! can emit a synthetic surface field; [`RemoteSurrogate`] forwards cell
//! centers to an external field-predicting service and integrates the
//! returned field locally.

mod liftline;
pub mod mock;
mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::{AeroCoefficients, AeroError, Atmosphere, InflowConditions, SurfaceField};
use crate::geometry::{GeometryError, MeshResolution, WingDesign};

pub use liftline::{liftline_gradient, liftline_predict, synthesize_field, LiftLine, LiftLineParams, MACH_DIVERGENCE};
pub use remote::{RemoteConfig, RemoteRequest, RemoteResponse, RemoteSurrogate};

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("outside the model domain: {0}")]
    OutOfDomain(String),
    #[error("remote surrogate timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("remote surrogate unreachable after {attempts} attempt(s): {detail}")]
    Transport { attempts: u32, detail: String },
    #[error("protocol error in `{field}`: {detail}")]
    Protocol { field: String, detail: String },
}

impl SurrogateError {
    /// Failures of the remote service rather than of the request.
    pub fn is_remote_failure(&self) -> bool {
        matches!(
            self,
            Self::Timeout { .. } | Self::Transport { .. } | Self::Protocol { .. }
        )
    }
}

impl From<GeometryError> for SurrogateError {
    fn from(e: GeometryError) -> Self {
        Self::InvalidInput(e.to_string())
    }
}

impl From<AeroError> for SurrogateError {
    fn from(e: AeroError) -> Self {
        Self::InvalidInput(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub surrogate: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub coefficients: AeroCoefficients,
    /// Per-face field on the mesh lofted at `field_resolution`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_field: Option<SurfaceField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_resolution: Option<MeshResolution>,
    pub provenance: Provenance,
    /// Retries spent by the remote backend; 0 for local backends.
    #[serde(default)]
    pub retries: u32,
}

/// Derivatives of `(C_l, C_D, eps)` with respect to
/// `(c_r, b, lambda, Lambda, U_inf, alpha)`; angles per degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientGradient {
    pub c_l: f64,
    pub c_d: f64,
    pub eps: f64,
    pub d_c_l: [f64; 6],
    pub d_c_d: [f64; 6],
    pub d_eps: [f64; 6],
}

pub trait Surrogate: Send + Sync {
    fn provenance(&self) -> Provenance;

    fn predict(
        &self,
        design: &WingDesign,
        inflow: &InflowConditions,
        atm: &Atmosphere,
    ) -> Result<Prediction, SurrogateError>;

    /// Analytic gradient, when the backend has one.
    fn gradient(
        &self,
        _design: &WingDesign,
        _inflow: &InflowConditions,
        _atm: &Atmosphere,
    ) -> Option<Result<CoefficientGradient, SurrogateError>> {
        None
    }
}

/// Serializable backend selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SurrogateRef {
    BuiltinLiftline {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fields: Option<MeshResolution>,
    },
    Remote(RemoteConfig),
}

impl SurrogateRef {
    pub fn build(&self) -> Result<Box<dyn Surrogate>, SurrogateError> {
        match self {
            Self::BuiltinLiftline { fields } => {
                let mut model = LiftLine::new(LiftLineParams::default());
                if let Some(res) = fields {
                    model = model.with_fields(*res);
                }
                Ok(Box::new(model))
            }
            Self::Remote(cfg) => Ok(Box::new(RemoteSurrogate::new(cfg.clone())?)),
        }
    }
}

impl Default for SurrogateRef {
    fn default() -> Self {
        Self::BuiltinLiftline { fields: None }
    }
}

/// Largest relative difference between the coefficients of `prediction` and
/// those obtained by integrating its surface field on the mesh lofted at the
/// field's resolution. `None` when the prediction carries no field.
///
/// Differences are relative to `|(C_D, C_l)|` so that a vanishing lift
/// coefficient does not blow the ratio up.
pub fn field_consistency(
    prediction: &Prediction,
    design: &WingDesign,
    inflow: &InflowConditions,
    atm: &Atmosphere,
) -> Option<Result<f64, SurrogateError>> {
    let field = prediction.surface_field.as_ref()?;
    let res = prediction.field_resolution?;
    Some((|| {
        let mesh = crate::geometry::loft_wing(design, &res)?;
        let forces = crate::aero::integrate_forces(&mesh, field, atm.p_inf)?;
        let local = crate::aero::coefficients(&forces, inflow, atm, crate::geometry::planform_area(design))?;
        let c = &prediction.coefficients;
        let scale = c.c_d.hypot(c.c_l).max(f64::MIN_POSITIVE);
        Ok((local.c_d - c.c_d).abs().max((local.c_l - c.c_l).abs()) / scale)
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_fields_integrate_to_the_returned_coefficients() {
        let model = LiftLine::new(LiftLineParams::default()).with_fields(MeshResolution::new(20, 8));
        let design = WingDesign::new(1.0, 1.3, 0.5, 25.0).unwrap();
        let atm = Atmosphere::isa_sea_level();
        for alpha in [-4.0, 0.0, 3.0] {
            let inflow = InflowConditions::new(220.0, alpha).unwrap();
            let p = model.predict(&design, &inflow, &atm).unwrap();
            let err = field_consistency(&p, &design, &inflow, &atm).unwrap().unwrap();
            assert!(err < 1e-9, "alpha {alpha}: {err}");
        }
        let plain = LiftLine::new(LiftLineParams::default());
        let inflow = InflowConditions::new(220.0, 2.0).unwrap();
        let p = plain.predict(&design, &inflow, &atm).unwrap();
        assert!(field_consistency(&p, &design, &inflow, &atm).is_none());
    }
}
