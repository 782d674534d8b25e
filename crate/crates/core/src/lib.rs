//! Wing design-space exploration: parametric NACA0012 wing geometry, surface
//! force integration, design-of-experiments splits, surrogate evaluation and
//! lift-to-drag optimization.

// Negated comparisons deliberately reject NaN along with out-of-range values,
// and index loops read more naturally in the dense linear algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod aero;
pub mod datastore;
pub mod doe;
pub mod geometry;
pub mod metrics;
pub mod optimize;
pub mod space;
pub mod surrogate;

pub use aero::{AeroCoefficients, Atmosphere, InflowConditions, SurfaceField};
pub use doe::CaseSpec;
pub use geometry::{MeshResolution, TriMesh, WingDesign};
pub use space::{DesignVector, ParameterSpace};
pub use surrogate::{Prediction, Surrogate, SurrogateError, SurrogateRef};
