//! Design of experiments: uniform sampling, hull-peeling splits, parameter
//! scans and nearest-neighbor lookup.

mod hull;
mod kdtree;
mod split;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::InflowConditions;
use crate::geometry::WingDesign;
use crate::space::{DesignVector, ParameterSpace, SpaceError};

pub use hull::{extreme_points, extreme_subset, peel_layers, HullError, PeelMode, Peeler, PointCloud};
pub use kdtree::{nearest_neighbor, KdTree, Neighbor};
pub use split::{peel_split, Split, SplitAssignment, SplitConfig, SplitCounts, SplitManifest};

#[derive(Debug, Error)]
pub enum DoeError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error("need more than {needed} cases for the requested split, got {available}")]
    InsufficientCases { needed: usize, available: usize },
    #[error("duplicate case id `{0}`")]
    DuplicateId(String),
    #[error("{0} must not be empty")]
    Empty(&'static str),
}

/// One case of a dataset: a geometry and its inflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub id: String,
    pub design: WingDesign,
    pub inflow: InflowConditions,
}

impl CaseSpec {
    pub fn vector(&self) -> DesignVector {
        DesignVector::from_parts(&self.design, &self.inflow)
    }

    pub fn from_vector(id: impl Into<String>, phi: &DesignVector) -> Self {
        Self {
            id: id.into(),
            design: phi.design(),
            inflow: phi.inflow(),
        }
    }
}

/// Id of sample `index` drawn with `seed`.
pub fn sample_id(seed: u64, index: usize) -> String {
    format!("s{seed}-{index:06}")
}

/// `n` cases with every parameter drawn independently and uniformly from its
/// interval.
pub fn sample_uniform(space: &ParameterSpace, n: usize, seed: u64) -> Result<Vec<CaseSpec>, DoeError> {
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ivs = space.intervals();
    let dists: Vec<Option<Uniform<f64>>> = ivs.iter().map(|iv| Uniform::new_inclusive(iv.lo, iv.hi).ok()).collect();
    Ok((0..n)
        .map(|k| {
            let phi = DesignVector(std::array::from_fn(|i| match &dists[i] {
                Some(d) => d.sample(&mut rng),
                None => ivs[i].lo,
            }));
            CaseSpec::from_vector(sample_id(seed, k), &phi)
        })
        .collect())
}

/// Evenly spaced values `start, start + step, ...` up to `stop` inclusive.
pub fn arange_inclusive(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return vec![start];
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// Cartesian product of sweep and angle-of-attack values at fixed
/// `(c_r, b, λ)` and `U∞`; sweep varies slowest.
pub fn scan_grid(
    c_r: f64,
    b: f64,
    taper: f64,
    u_inf: f64,
    alpha_values: &[f64],
    sweep_values: &[f64],
) -> Result<Vec<CaseSpec>, DoeError> {
    if alpha_values.is_empty() {
        return Err(DoeError::Empty("alpha values"));
    }
    if sweep_values.is_empty() {
        return Err(DoeError::Empty("sweep values"));
    }
    let mut cases = Vec::with_capacity(alpha_values.len() * sweep_values.len());
    for &sweep in sweep_values {
        for &alpha in alpha_values {
            let k = cases.len();
            cases.push(CaseSpec {
                id: format!("scan-{k:04}"),
                design: WingDesign {
                    c_r,
                    b,
                    taper,
                    sweep_deg: sweep,
                },
                inflow: InflowConditions {
                    u_inf,
                    alpha_deg: alpha,
                },
            });
        }
    }
    Ok(cases)
}

/// Checks that case ids are unique.
pub fn check_unique_ids(cases: &[CaseSpec]) -> Result<(), DoeError> {
    let mut seen = std::collections::HashSet::with_capacity(cases.len());
    for c in cases {
        if !seen.insert(c.id.as_str()) {
            return Err(DoeError::DuplicateId(c.id.clone()));
        }
    }
    Ok(())
}

/// Min-max normalized coordinates of `cases` over their own extent; constant
/// parameters map to 0.
pub fn normalize_cases(cases: &[CaseSpec]) -> Vec<[f64; 6]> {
    let vs: Vec<[f64; 6]> = cases.iter().map(|c| c.vector().0).collect();
    let mut lo = [f64::INFINITY; 6];
    let mut hi = [f64::NEG_INFINITY; 6];
    for v in &vs {
        for i in 0..6 {
            lo[i] = lo[i].min(v[i]);
            hi[i] = hi[i].max(v[i]);
        }
    }
    vs.iter()
        .map(|v| {
            std::array::from_fn(|i| {
                let w = hi[i] - lo[i];
                if w > 0.0 {
                    (v[i] - lo[i]) / w
                } else {
                    0.0
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Interval;

    #[test]
    fn sampling_is_seeded_and_labelled() {
        let space = ParameterSpace::default();
        let a = sample_uniform(&space, 50, 7).unwrap();
        let b = sample_uniform(&space, 50, 7).unwrap();
        let c = sample_uniform(&space, 50, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a[3].id, "s7-000003");
        check_unique_ids(&a).unwrap();
        assert!(a.iter().all(|k| space.contains(&k.vector())));
    }

    #[test]
    fn degenerate_interval_pins_the_parameter() {
        let mut ivs = ParameterSpace::default().intervals();
        ivs[3] = Interval::new(25.0, 25.0);
        let space = ParameterSpace::from_intervals(ivs).unwrap();
        let cases = sample_uniform(&space, 100, 1).unwrap();
        assert!(cases.iter().all(|c| c.design.sweep_deg == 25.0));
    }

    #[test]
    fn marginals_are_uniform() {
        let space = ParameterSpace::default();
        let cases = sample_uniform(&space, 10_000, 42).unwrap();
        let ivs = space.intervals();
        for i in 0..6 {
            let mut u: Vec<f64> = cases
                .iter()
                .map(|c| (c.vector().0[i] - ivs[i].lo) / ivs[i].width())
                .collect();
            u.sort_by(f64::total_cmp);
            let n = u.len() as f64;
            let ks = u
                .iter()
                .enumerate()
                .map(|(k, &x)| ((k + 1) as f64 / n - x).max(x - k as f64 / n))
                .fold(0.0, f64::max);
            assert!(ks < 0.02, "parameter {i}: KS = {ks}");
        }
    }

    #[test]
    fn scan_grid_order_and_size() {
        let alphas = arange_inclusive(-30.0, 30.0, 2.0);
        let sweeps = arange_inclusive(0.0, 70.0, 10.0);
        assert_eq!(alphas.len(), 31);
        assert_eq!(sweeps.len(), 8);
        let grid = scan_grid(1.0, 1.2, 0.5, 200.0, &alphas, &sweeps).unwrap();
        assert_eq!(grid.len(), 248);
        assert_eq!(grid[0].design.sweep_deg, 0.0);
        assert_eq!(grid[0].inflow.alpha_deg, -30.0);
        assert_eq!(grid[1].inflow.alpha_deg, -28.0);
        assert_eq!(grid[31].design.sweep_deg, 10.0);
        check_unique_ids(&grid).unwrap();
        assert_eq!(scan_grid(1.0, 1.2, 0.5, 200.0, &[3.0], &[10.0]).unwrap().len(), 1);
        assert!(scan_grid(1.0, 1.2, 0.5, 200.0, &[], &[10.0]).is_err());
    }
}
