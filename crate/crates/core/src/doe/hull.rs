//! Convex-hull vertex detection by per-point LP feasibility.
//!
//! Point `p` is a hull vertex iff the system `Σ λ_j (x_j - p) = 0`,
//! `Σ λ_j = 1`, `λ ≥ 0` over the other points has no solution. Each system is
//! solved with a phase-1 revised simplex on `d + 1` rows. Columns are priced
//! over a small working set of far-out points first; a full pass over all
//! points certifies infeasibility.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const FEAS_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 32;
const BLAND_AFTER: usize = 50;
const WORKING_SET: usize = 512;

#[derive(Debug, Error, PartialEq)]
pub enum HullError {
    #[error("point {index} has {found} coordinates, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

/// Which points are tested in each peel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PeelMode {
    /// Every remaining point.
    Exact,
    /// Only the `candidates` points farthest from the centroid of the
    /// remaining set; the others are assumed interior.
    Approximate { candidates: usize },
}

impl PeelMode {
    pub const APPROXIMATE_ABOVE: usize = 10_000;
    pub const DEFAULT_CANDIDATES: usize = 4096;

    /// Exact up to 10,000 points, approximate with 4,096 candidates above.
    pub fn for_size(n: usize) -> Self {
        if n > Self::APPROXIMATE_ABOVE {
            Self::Approximate {
                candidates: Self::DEFAULT_CANDIDATES,
            }
        } else {
            Self::Exact
        }
    }
}

/// Row-major point cloud of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn new(points: &[Vec<f64>]) -> Result<Self, HullError> {
        let dim = points.first().map_or(1, Vec::len);
        if dim == 0 {
            return Err(HullError::ZeroDimension);
        }
        let mut data = Vec::with_capacity(dim * points.len());
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(HullError::DimensionMismatch {
                    index,
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(HullError::NonFinite(index));
            }
            data.extend_from_slice(p);
        }
        Ok(Self { dim, data })
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self, HullError> {
        if dim == 0 {
            return Err(HullError::ZeroDimension);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(HullError::DimensionMismatch {
                index: data.len() / dim,
                expected: dim,
                found: data.len() % dim,
            });
        }
        if let Some(i) = data.iter().position(|c| !c.is_finite()) {
            return Err(HullError::NonFinite(i / dim));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn centroid(&self, subset: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for &i in subset {
            for (ck, pk) in c.iter_mut().zip(self.point(i)) {
                *ck += pk;
            }
        }
        let n = subset.len().max(1) as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }

    fn dist2(&self, i: usize, to: &[f64]) -> f64 {
        self.point(i).iter().zip(to).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// `subset` sorted by descending squared distance from `to`, index
    /// ascending on ties.
    pub fn farthest_first(&self, subset: &[usize], to: &[f64]) -> Vec<usize> {
        let mut keyed: Vec<(f64, usize)> = subset.iter().map(|&i| (self.dist2(i, to), i)).collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        keyed.into_iter().map(|(_, i)| i).collect()
    }
}

/// Indices of the convex-hull vertices of `points`, ascending.
///
/// Exact duplicates share one verdict, so a set of identical points is all
/// extreme.
pub fn extreme_points(points: &[Vec<f64>]) -> Result<Vec<usize>, HullError> {
    let cloud = PointCloud::new(points)?;
    let all: Vec<usize> = (0..cloud.len()).collect();
    Ok(extreme_subset(&cloud, &all, PeelMode::Exact))
}

/// Hull vertices of the points of `cloud` listed in `subset`, ascending.
pub fn extreme_subset(cloud: &PointCloud, subset: &[usize], mode: PeelMode) -> Vec<usize> {
    if subset.is_empty() {
        return Vec::new();
    }
    let (reps, groups) = dedupe(cloud, subset);
    if reps.len() == 1 {
        let mut all = subset.to_vec();
        all.sort_unstable();
        return all;
    }
    let centroid = cloud.centroid(&reps);
    let by_distance = cloud.farthest_first(&reps, &centroid);
    let working: Vec<usize> = by_distance.iter().copied().take(WORKING_SET).collect();
    let candidates: Vec<usize> = match mode {
        PeelMode::Exact => reps.clone(),
        PeelMode::Approximate { candidates } => by_distance.iter().copied().take(candidates).collect(),
    };
    let axis_extreme = axis_extremes(cloud, &reps);
    let verdicts: Vec<(usize, bool)> = candidates
        .par_iter()
        .map(|&i| {
            let extreme = axis_extreme.contains(&i) || !Feasibility::new(cloud, i).interior(&reps, &working);
            (i, extreme)
        })
        .collect();
    let mut out: Vec<usize> = verdicts
        .into_iter()
        .filter(|&(_, e)| e)
        .flat_map(|(i, _)| groups[&i].iter().copied())
        .collect();
    out.sort_unstable();
    out
}

/// Representatives of each group of identical points, and the members of
/// each group keyed by representative.
fn dedupe(cloud: &PointCloud, subset: &[usize]) -> (Vec<usize>, std::collections::HashMap<usize, Vec<usize>>) {
    let mut sorted = subset.to_vec();
    let cmp = |a: &usize, b: &usize| {
        cloud
            .point(*a)
            .iter()
            .zip(cloud.point(*b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(b))
    };
    sorted.sort_by(cmp);
    let mut reps = Vec::new();
    let mut groups = std::collections::HashMap::new();
    let mut start = 0;
    for k in 1..=sorted.len() {
        if k == sorted.len() || cloud.point(sorted[k]) != cloud.point(sorted[start]) {
            let rep = sorted[start];
            reps.push(rep);
            groups.insert(rep, sorted[start..k].to_vec());
            start = k;
        }
    }
    reps.sort_unstable();
    (reps, groups)
}

/// Points that are the unique minimum or maximum along some axis.
fn axis_extremes(cloud: &PointCloud, reps: &[usize]) -> std::collections::HashSet<usize> {
    let mut out = std::collections::HashSet::new();
    for k in 0..cloud.dim {
        for sign in [1.0, -1.0] {
            let mut best = f64::NEG_INFINITY;
            let mut who = None;
            let mut unique = false;
            for &i in reps {
                let v = sign * cloud.point(i)[k];
                if v > best {
                    best = v;
                    who = Some(i);
                    unique = true;
                } else if v == best {
                    unique = false;
                }
            }
            if let (Some(i), true) = (who, unique) {
                out.insert(i);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    Artificial(usize),
    Point(usize),
}

impl Var {
    fn key(self, m: usize) -> usize {
        match self {
            Var::Artificial(r) => r,
            Var::Point(j) => m + j,
        }
    }
}

/// Phase-1 simplex state for one membership test.
struct Feasibility<'a> {
    cloud: &'a PointCloud,
    target: usize,
    m: usize,
    binv: Vec<f64>,
    basis: Vec<Var>,
    xb: Vec<f64>,
}

impl<'a> Feasibility<'a> {
    fn new(cloud: &'a PointCloud, target: usize) -> Self {
        let m = cloud.dim + 1;
        let mut binv = vec![0.0; m * m];
        for r in 0..m {
            binv[r * m + r] = 1.0;
        }
        let mut xb = vec![0.0; m];
        xb[m - 1] = 1.0;
        Self {
            cloud,
            target,
            m,
            binv,
            basis: (0..m).map(Var::Artificial).collect(),
            xb,
        }
    }

    fn column(&self, var: Var) -> Vec<f64> {
        let mut a = vec![0.0; self.m];
        match var {
            Var::Artificial(r) => a[r] = 1.0,
            Var::Point(j) => {
                let p = self.cloud.point(self.target);
                for (k, (x, t)) in self.cloud.point(j).iter().zip(p).enumerate() {
                    a[k] = x - t;
                }
                a[self.m - 1] = 1.0;
            }
        }
        a
    }

    fn infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(v, _)| matches!(v, Var::Artificial(_)))
            .map(|(_, x)| x)
            .sum()
    }

    /// Duals of the phase-1 objective.
    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, v) in self.basis.iter().enumerate() {
            if matches!(v, Var::Artificial(_)) {
                for k in 0..m {
                    y[k] += self.binv[r * m + k];
                }
            }
        }
        y
    }

    /// `-reduced cost` of every point column is `y_d · x_j + offset`.
    fn pricing(&self, y: &[f64]) -> (Vec<f64>, f64) {
        let d = self.cloud.dim;
        let p = self.cloud.point(self.target);
        let offset = y[d] - y[..d].iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
        (y[..d].to_vec(), offset)
    }

    fn score(&self, yd: &[f64], offset: f64, j: usize) -> f64 {
        self.cloud.point(j).iter().zip(yd).map(|(a, b)| a * b).sum::<f64>() + offset
    }

    fn in_basis(&self, j: usize) -> bool {
        self.basis.contains(&Var::Point(j))
    }

    fn refactor(&mut self) {
        let m = self.m;
        let cols: Vec<Vec<f64>> = self.basis.iter().map(|&v| self.column(v)).collect();
        let b = DMatrix::from_fn(m, m, |r, c| cols[c][r]);
        if let Some(inv) = b.try_inverse() {
            for r in 0..m {
                for c in 0..m {
                    self.binv[r * m + c] = inv[(r, c)];
                }
            }
            for r in 0..m {
                // b = e_m
                self.xb[r] = self.binv[r * m + m - 1].max(0.0);
            }
        }
    }

    fn pivot(&mut self, row: usize, w: &[f64], entering: Var) {
        let m = self.m;
        let piv = w[row];
        for c in 0..m {
            self.binv[row * m + c] /= piv;
        }
        self.xb[row] /= piv;
        for r in 0..m {
            if r != row && w[r] != 0.0 {
                let f = w[r];
                for c in 0..m {
                    self.binv[r * m + c] -= f * self.binv[row * m + c];
                }
                self.xb[r] -= f * self.xb[row];
                if self.xb[r] < 0.0 && self.xb[r] > -FEAS_TOL {
                    self.xb[r] = 0.0;
                }
            }
        }
        self.basis[row] = entering;
    }

    /// True iff the target is a convex combination of the other points in
    /// `all`. `working` is priced first; `all` is scanned only to certify.
    fn interior(mut self, all: &[usize], working: &[usize]) -> bool {
        let m = self.m;
        let mut working: Vec<usize> = working.iter().copied().filter(|&j| j != self.target).collect();
        let cap = 50 * (m + all.len()).max(100);
        let mut degenerate = 0usize;
        let mut since_refactor = 0usize;
        for _ in 0..cap {
            if self.infeasibility() <= FEAS_TOL {
                return true;
            }
            let y = self.duals();
            let (yd, offset) = self.pricing(&y);
            let bland = degenerate >= BLAND_AFTER;
            let mut entering = self.choose(&working, &yd, offset, bland);
            if entering.is_none() {
                let others: Vec<usize> = all.iter().copied().filter(|&j| j != self.target).collect();
                entering = self.choose(&others, &yd, offset, bland);
                match entering {
                    Some(j) => working.push(j),
                    None => return false,
                }
            }
            let q = Var::Point(entering.unwrap());
            let a = self.column(q);
            let w: Vec<f64> = (0..m)
                .map(|r| (0..m).map(|c| self.binv[r * m + c] * a[c]).sum())
                .collect();
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                if w[r] > PIVOT_TOL {
                    let t = self.xb[r].max(0.0) / w[r];
                    let better = match leave {
                        None => true,
                        Some((lr, lt)) => {
                            t < lt - 1e-15 || (t <= lt + 1e-15 && self.basis[r].key(m) < self.basis[lr].key(m))
                        }
                    };
                    if better {
                        leave = Some((r, t));
                    }
                }
            }
            let Some((row, step)) = leave else {
                // Unbounded ray cannot occur in phase 1; recover numerically.
                self.refactor();
                since_refactor = 0;
                continue;
            };
            degenerate = if step <= 1e-12 { degenerate + 1 } else { 0 };
            self.pivot(row, &w, q);
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY {
                self.refactor();
                since_refactor = 0;
            }
        }
        // Iteration cap: report as a vertex, the conservative answer.
        false
    }

    fn choose(&self, columns: &[usize], yd: &[f64], offset: f64, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &j in columns {
            let s = self.score(yd, offset, j);
            if s <= COST_TOL || self.in_basis(j) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bj, bs)) => {
                    if bland {
                        j < bj
                    } else {
                        s > bs || (s == bs && j < bj)
                    }
                }
            };
            if better {
                best = Some((j, s));
            }
        }
        best.map(|(j, _)| j)
    }
}

/// Successive hull layers of a point set, outermost first.
pub struct Peeler<'a> {
    cloud: &'a PointCloud,
    remaining: Vec<usize>,
    mode: Option<PeelMode>,
}

impl<'a> Peeler<'a> {
    /// `mode = None` picks [`PeelMode::for_size`] afresh for every layer.
    pub fn new(cloud: &'a PointCloud, mode: Option<PeelMode>) -> Self {
        Self {
            cloud,
            remaining: (0..cloud.len()).collect(),
            mode,
        }
    }

    pub fn remaining(&self) -> &[usize] {
        &self.remaining
    }

    /// Removes and returns the next layer; empty once nothing remains.
    pub fn next_layer(&mut self) -> Vec<usize> {
        let mode = self.mode.unwrap_or_else(|| PeelMode::for_size(self.remaining.len()));
        let mut layer = extreme_subset(self.cloud, &self.remaining, mode);
        if layer.is_empty() && !self.remaining.is_empty() {
            // The approximate mode can miss every vertex; fall back.
            layer = extreme_subset(self.cloud, &self.remaining, PeelMode::Exact);
        }
        let drop: std::collections::HashSet<usize> = layer.iter().copied().collect();
        self.remaining.retain(|i| !drop.contains(i));
        layer
    }
}

/// All hull layers of `points`, outermost first.
pub fn peel_layers(points: &[Vec<f64>]) -> Result<Vec<Vec<usize>>, HullError> {
    let cloud = PointCloud::new(points)?;
    let mut peeler = Peeler::new(&cloud, Some(PeelMode::Exact));
    let mut layers = Vec::new();
    while !peeler.remaining().is_empty() {
        layers.push(peeler.next_layer());
    }
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn square_corners_and_center() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.5, 0.5],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ];
        assert_eq!(extreme_points(&pts).unwrap(), vec![0, 1, 3, 4]);
    }

    #[test]
    fn segment_in_six_dimensions_has_two_vertices() {
        let dir = [0.3, -0.1, 0.7, 0.2, 0.05, -0.4];
        let ts = [0.4, 0.0, 0.9, 0.25, 1.0, 0.6, 0.1];
        let pts: Vec<Vec<f64>> = ts.iter().map(|t| dir.iter().map(|d| 0.5 + t * d).collect()).collect();
        assert_eq!(extreme_points(&pts).unwrap(), vec![1, 4]);
    }

    #[test]
    fn identical_points_are_all_extreme() {
        let pts = vec![vec![0.2, 0.3]; 5];
        assert_eq!(extreme_points(&pts).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn duplicated_vertex_keeps_both_copies() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![0.2, 0.2],
        ];
        assert_eq!(extreme_points(&pts).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn points_on_an_edge_are_not_vertices() {
        let pts = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.0, 0.0],
            vec![0.0, 0.5, 0.5],
        ];
        assert_eq!(extreme_points(&pts).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_ragged_input() {
        assert!(matches!(
            extreme_points(&[vec![0.0, 1.0], vec![1.0]]),
            Err(HullError::DimensionMismatch { index: 1, .. })
        ));
        assert_eq!(extreme_points(&[vec![f64::NAN]]), Err(HullError::NonFinite(0)));
    }

    #[test]
    fn approximate_equals_exact_when_all_points_are_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
            .collect();
        let cloud = PointCloud::new(&pts).unwrap();
        let all: Vec<usize> = (0..pts.len()).collect();
        assert_eq!(
            extreme_subset(&cloud, &all, PeelMode::Exact),
            extreme_subset(&cloud, &all, PeelMode::Approximate { candidates: 300 })
        );
    }

    #[test]
    fn layers_partition_the_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Vec<f64>> = (0..120)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let layers = peel_layers(&pts).unwrap();
        let mut seen: Vec<usize> = layers.concat();
        seen.sort_unstable();
        assert_eq!(seen, (0..120).collect::<Vec<_>>());
        assert!(layers.iter().all(|l| !l.is_empty()));
    }
}
