//! The six-dimensional design space `(c_r, b, λ, Λ, U∞, α)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::InflowConditions;
use crate::geometry::WingDesign;

pub const PARAMETER_NAMES: [&str; 6] = ["c_r", "b", "lambda", "Lambda", "U_inf", "alpha"];
pub const PARAMETER_UNITS: [&str; 6] = ["m", "m", "-", "deg", "m/s", "deg"];

#[derive(Debug, Error, PartialEq)]
#[error("parameter {name}: {reason}")]
pub struct SpaceError {
    pub name: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// A point of the design space, ordered as [`PARAMETER_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignVector(pub [f64; 6]);

impl DesignVector {
    pub fn from_parts(design: &WingDesign, inflow: &InflowConditions) -> Self {
        Self([
            design.c_r,
            design.b,
            design.taper,
            design.sweep_deg,
            inflow.u_inf,
            inflow.alpha_deg,
        ])
    }

    /// The geometry part. Not validated.
    pub fn design(&self) -> WingDesign {
        WingDesign {
            c_r: self.0[0],
            b: self.0[1],
            taper: self.0[2],
            sweep_deg: self.0[3],
        }
    }

    pub fn inflow(&self) -> InflowConditions {
        InflowConditions {
            u_inf: self.0[4],
            alpha_deg: self.0[5],
        }
    }
}

/// Closed sampling intervals for each of the six parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub c_r: Interval,
    pub b: Interval,
    #[serde(rename = "lambda")]
    pub taper: Interval,
    #[serde(rename = "Lambda")]
    pub sweep_deg: Interval,
    #[serde(rename = "U_inf")]
    pub u_inf: Interval,
    #[serde(rename = "alpha")]
    pub alpha_deg: Interval,
}

impl ParameterSpace {
    /// Training ranges of the wing dataset. The angle-of-attack interval is an
    /// assumption; override it when the true range is known.
    pub const fn default_training() -> Self {
        Self {
            c_r: Interval::new(0.7, 1.2),
            b: Interval::new(1.0, 1.5),
            taper: Interval::new(0.4, 0.7),
            sweep_deg: Interval::new(0.0, 40.0),
            u_inf: Interval::new(150.0, 300.0),
            alpha_deg: Interval::new(-10.0, 10.0),
        }
    }

    pub fn from_intervals(intervals: [Interval; 6]) -> Result<Self, SpaceError> {
        let [c_r, b, taper, sweep_deg, u_inf, alpha_deg] = intervals;
        let space = Self {
            c_r,
            b,
            taper,
            sweep_deg,
            u_inf,
            alpha_deg,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn intervals(&self) -> [Interval; 6] {
        [self.c_r, self.b, self.taper, self.sweep_deg, self.u_inf, self.alpha_deg]
    }

    /// Degenerate intervals (`lo == hi`) are allowed and pin the parameter.
    pub fn validate(&self) -> Result<(), SpaceError> {
        for (iv, name) in self.intervals().iter().zip(PARAMETER_NAMES) {
            if !(iv.lo.is_finite() && iv.hi.is_finite()) {
                return Err(SpaceError {
                    name,
                    reason: "bounds must be finite".into(),
                });
            }
            if iv.lo > iv.hi {
                return Err(SpaceError {
                    name,
                    reason: format!("lower bound {} exceeds upper bound {}", iv.lo, iv.hi),
                });
            }
        }
        Ok(())
    }

    pub fn lower(&self) -> [f64; 6] {
        self.intervals().map(|iv| iv.lo)
    }

    pub fn upper(&self) -> [f64; 6] {
        self.intervals().map(|iv| iv.hi)
    }

    pub fn center(&self) -> DesignVector {
        DesignVector(self.intervals().map(|iv| iv.center()))
    }

    pub fn contains(&self, phi: &DesignVector) -> bool {
        self.intervals().iter().zip(phi.0).all(|(iv, v)| iv.contains(v))
    }

    /// Names of the parameters of `phi` that fall outside their interval.
    pub fn violations(&self, phi: &DesignVector) -> Vec<&'static str> {
        self.intervals()
            .iter()
            .zip(phi.0)
            .zip(PARAMETER_NAMES)
            .filter(|((iv, v), _)| !iv.contains(*v))
            .map(|(_, name)| name)
            .collect()
    }

    /// Min-max normalization to `[0, 1]`; pinned parameters map to 0.
    pub fn normalize(&self, phi: &DesignVector) -> [f64; 6] {
        let ivs = self.intervals();
        std::array::from_fn(|i| {
            let w = ivs[i].width();
            if w > 0.0 {
                (phi.0[i] - ivs[i].lo) / w
            } else {
                0.0
            }
        })
    }

    pub fn denormalize(&self, unit: &[f64; 6]) -> DesignVector {
        let ivs = self.intervals();
        DesignVector(std::array::from_fn(|i| ivs[i].lo + unit[i] * ivs[i].width()))
    }
}

impl Default for ParameterSpace {
    fn default() -> Self {
        Self::default_training()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_round_trip() {
        let space = ParameterSpace::default();
        let phi = DesignVector([0.8, 1.2, 0.5, 10.0, 200.0, -2.0]);
        let back = space.denormalize(&space.normalize(&phi));
        for (a, b) in phi.0.iter().zip(back.0) {
            assert!((a - b).abs() < 1e-12);
        }
        for u in space.normalize(&space.center()) {
            assert!((u - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn violations_name_the_parameters() {
        let space = ParameterSpace::default();
        let phi = DesignVector([0.8, 1.2, 0.5, 70.0, 200.0, -26.0]);
        assert_eq!(space.violations(&phi), vec!["Lambda", "alpha"]);
        assert!(!space.contains(&phi));
    }

    #[test]
    fn inverted_interval_is_rejected() {
        let mut ivs = ParameterSpace::default().intervals();
        ivs[4] = Interval::new(300.0, 150.0);
        assert_eq!(ParameterSpace::from_intervals(ivs).unwrap_err().name, "U_inf");
        ivs[4] = Interval::new(200.0, 200.0);
        assert!(ParameterSpace::from_intervals(ivs).is_ok());
    }

    #[test]
    fn json_uses_parameter_names() {
        let v = serde_json::to_value(ParameterSpace::default()).unwrap();
        for name in PARAMETER_NAMES {
            assert!(v.get(name).is_some(), "{name}");
        }
    }
}
