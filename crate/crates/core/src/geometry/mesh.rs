use std::collections::HashMap;

use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

/// Derived per-face quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    /// Unit outward normal (right-handed vertex order).
    pub normal: Vec3,
    pub area: f64,
    pub centroid: Vec3,
}

/// Indexed triangle surface. Coordinates in meters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        Self { vertices, triangles }
    }

    pub fn face_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn face(&self, f: usize) -> Face {
        let [a, b, c] = self.corners(f);
        let cross = (b - a).cross(&(c - a));
        let norm = cross.norm();
        Face {
            normal: if norm > 0.0 { cross / norm } else { Vec3::zeros() },
            area: 0.5 * norm,
            centroid: (a + b + c) / 3.0,
        }
    }

    pub fn faces(&self) -> Vec<Face> {
        (0..self.face_count()).map(|f| self.face(f)).collect()
    }

    pub fn centroids(&self) -> Vec<Vec3> {
        (0..self.face_count()).map(|f| self.face(f).centroid).collect()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.face_count()).map(|f| self.face(f).area).sum()
    }

    /// `sum_f A_f n_f`, which vanishes for a closed surface.
    pub fn area_vector_sum(&self) -> Vec3 {
        (0..self.face_count())
            .map(|f| {
                let [a, b, c] = self.corners(f);
                0.5 * (b - a).cross(&(c - a))
            })
            .fold(Vec3::zeros(), |acc, v| acc + v)
    }

    /// Enclosed volume via the divergence theorem; positive for outward normals.
    pub fn signed_volume(&self) -> f64 {
        (0..self.face_count())
            .map(|f| {
                let [a, b, c] = self.corners(f);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Number of triangles using each undirected edge.
    pub fn edge_use_counts(&self) -> HashMap<(u32, u32), usize> {
        let mut counts = HashMap::with_capacity(self.triangles.len() * 3 / 2);
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Every edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        !self.triangles.is_empty() && self.edge_use_counts().values().all(|&c| c == 2)
    }

    /// Every directed edge appears once, so adjacent faces agree on orientation.
    pub fn is_consistently_oriented(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.triangles.len() * 3);
        self.triangles
            .iter()
            .all(|tri| (0..3).all(|k| seen.insert((tri[k], tri[(k + 1) % 3]))))
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }
}

#[cfg(test)]
pub(crate) fn unit_cube() -> TriMesh {
    let v = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
    let vertices = vec![
        v(0., 0., 0.),
        v(1., 0., 0.),
        v(1., 1., 0.),
        v(0., 1., 0.),
        v(0., 0., 1.),
        v(1., 0., 1.),
        v(1., 1., 1.),
        v(0., 1., 1.),
    ];
    let triangles = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [2, 3, 7],
        [2, 7, 6],
        [1, 2, 6],
        [1, 6, 5],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_is_closed_and_outward() {
        let cube = unit_cube();
        assert!(cube.is_watertight());
        assert!(cube.is_consistently_oriented());
        assert!((cube.signed_volume() - 1.0).abs() < 1e-15);
        assert!((cube.total_area() - 6.0).abs() < 1e-15);
        assert!(cube.area_vector_sum().norm() < 1e-15);
        for f in cube.faces() {
            // outward: normal points away from the cube center
            assert!(f.normal.dot(&(f.centroid - Vec3::repeat(0.5))) > 0.0);
        }
    }

    #[test]
    fn open_mesh_is_not_watertight() {
        let mut cube = unit_cube();
        cube.triangles.pop();
        assert!(!cube.is_watertight());
    }
}
