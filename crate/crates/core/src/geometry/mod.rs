//! Parametric NACA0012 wing geometry.
//!
//! A wing is a NACA0012 section lofted from the symmetry plane (`y = 0`) to
//! the tip (`y = b`). Each spanwise station is the unit airfoil scaled by the
//! local chord and shifted by the leading-edge sweep offset, so vertex
//! positions are smooth closed-form functions of the design parameters and
//! their derivatives are available analytically (see [`mesh_jacobian`]).

mod loft;
pub(crate) mod mesh;
mod naca;
pub mod stl;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use loft::{
    loft_wing, mesh_jacobian, planform_area, section_transform, MeshJacobian, MeshMetadata, SectionTransform,
    SWEEP_CONVENTION,
};
pub use mesh::{Face, TriMesh, Vec3};
pub use naca::{cosine_stations, naca0012_half_thickness};
pub use stl::{export_stl, import_stl, StlFormat};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid wing design: {field} {reason}")]
    InvalidDesign { field: &'static str, reason: String },
    #[error("x/c = {0} is outside the airfoil domain [0, 1]")]
    OutsideAirfoil(f64),
    #[error("span fraction {0} is outside [0, 1]")]
    OutsideSpan(f64),
    #[error("resolution {n_chord}x{n_span} is too coarse to close the surface (need n_chord >= 4, n_span >= 2)")]
    ResolutionTooCoarse { n_chord: usize, n_span: usize },
    #[error("malformed STL: {0}")]
    MalformedStl(String),
    #[error("non-manifold mesh after welding: {0}")]
    NonManifold(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The four geometric design parameters of a lofted NACA0012 wing.
///
/// Lengths are in meters, the sweep angle in degrees. `b` is the modeled span
/// from the symmetry plane to the tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WingDesign {
    pub c_r: f64,
    pub b: f64,
    #[serde(rename = "lambda")]
    pub taper: f64,
    #[serde(rename = "Lambda")]
    pub sweep_deg: f64,
}

impl WingDesign {
    pub fn new(c_r: f64, b: f64, taper: f64, sweep_deg: f64) -> Result<Self, GeometryError> {
        let design = Self {
            c_r,
            b,
            taper,
            sweep_deg,
        };
        design.validate()?;
        Ok(design)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let invalid = |field, reason: &str| GeometryError::InvalidDesign {
            field,
            reason: reason.to_string(),
        };
        if !(self.c_r.is_finite() && self.c_r > 0.0) {
            return Err(invalid("c_r", "must be a positive finite length"));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(invalid("b", "must be a positive finite length"));
        }
        if !(self.taper > 0.0 && self.taper <= 1.0) {
            return Err(invalid("lambda", "must lie in (0, 1]"));
        }
        if !(self.sweep_deg >= 0.0 && self.sweep_deg < 90.0) {
            return Err(invalid("Lambda", "must lie in [0, 90) degrees"));
        }
        Ok(())
    }

    pub fn tip_chord(&self) -> f64 {
        self.taper * self.c_r
    }

    pub fn sweep_rad(&self) -> f64 {
        self.sweep_deg.to_radians()
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.c_r, self.b, self.taper, self.sweep_deg]
    }
}

/// Number of chordwise stations per surface side and spanwise stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshResolution {
    pub n_chord: usize,
    pub n_span: usize,
}

impl MeshResolution {
    pub const fn new(n_chord: usize, n_span: usize) -> Self {
        Self { n_chord, n_span }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.n_chord < 4 || self.n_span < 2 {
            return Err(GeometryError::ResolutionTooCoarse {
                n_chord: self.n_chord,
                n_span: self.n_span,
            });
        }
        Ok(())
    }

    /// Points on one closed section loop (upper and lower surface share the
    /// leading- and trailing-edge points).
    pub fn loop_len(&self) -> usize {
        2 * self.n_chord - 2
    }

    pub fn vertex_count(&self) -> usize {
        self.n_span * self.loop_len() + 2
    }

    pub fn triangle_count(&self) -> usize {
        2 * (self.n_span - 1) * self.loop_len() + 2 * self.loop_len()
    }

    /// Doubles the number of panels in both directions.
    pub fn refined(&self) -> Self {
        Self::new(2 * self.n_chord - 1, 2 * self.n_span - 1)
    }
}

impl Default for MeshResolution {
    fn default() -> Self {
        Self::new(48, 24)
    }
}
