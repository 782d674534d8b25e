//! ASCII and binary STL exchange.
//!
//! Binary layout: 80-byte header, little-endian `u32` triangle count, then one
//! 50-byte record per triangle (normal and three vertices as `f32`, plus a
//! zero `u16` attribute). Import welds vertices whose `f32` coordinates match
//! bit for bit.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::mesh::{TriMesh, Vec3};
use super::GeometryError;

const HEADER: &[u8] = b"wingforge binary STL";
const RECORD_LEN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StlFormat {
    Ascii,
    Binary,
}

impl FromStr for StlFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ascii" => Ok(Self::Ascii),
            "binary" => Ok(Self::Binary),
            other => Err(format!("unknown STL format `{other}`")),
        }
    }
}

pub fn export_stl(mesh: &TriMesh, format: StlFormat, path: &Path) -> Result<(), GeometryError> {
    let bytes = match format {
        StlFormat::Binary => to_binary(mesh),
        StlFormat::Ascii => to_ascii(mesh, "wing").into_bytes(),
    };
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

pub fn import_stl(path: &Path) -> Result<TriMesh, GeometryError> {
    from_bytes(&fs::read(path)?)
}

fn to_f32(v: &Vec3) -> [f32; 3] {
    [v.x as f32, v.y as f32, v.z as f32]
}

/// Corners rounded to `f32` and the unit normal of the rounded triangle, so
/// that re-exporting an imported mesh reproduces the file byte for byte.
fn facet(mesh: &TriMesh, f: usize) -> ([f32; 3], [[f32; 3]; 3]) {
    let corners = mesh.corners(f).map(|v| to_f32(&v));
    let [a, b, c] = corners.map(|p| Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64));
    let cross = (b - a).cross(&(c - a));
    let norm = cross.norm();
    let normal = if norm > 0.0 { cross / norm } else { Vec3::zeros() };
    (to_f32(&normal), corners)
}

pub fn to_binary(mesh: &TriMesh) -> Vec<u8> {
    let mut buf = Vec::with_capacity(84 + RECORD_LEN * mesh.face_count());
    let mut header = [0u8; 80];
    header[..HEADER.len()].copy_from_slice(HEADER);
    buf.extend_from_slice(&header);
    buf.extend_from_slice(&(mesh.face_count() as u32).to_le_bytes());
    for f in 0..mesh.face_count() {
        let (normal, corners) = facet(mesh, f);
        for v in std::iter::once(normal).chain(corners) {
            for c in v {
                buf.extend_from_slice(&c.to_le_bytes());
            }
        }
        buf.extend_from_slice(&0u16.to_le_bytes());
    }
    buf
}

pub fn to_ascii(mesh: &TriMesh, name: &str) -> String {
    let mut s = format!("solid {name}\n");
    for f in 0..mesh.face_count() {
        let (n, corners) = facet(mesh, f);
        s.push_str(&format!(
            "  facet normal {:e} {:e} {:e}\n    outer loop\n",
            n[0], n[1], n[2]
        ));
        for p in corners {
            s.push_str(&format!("      vertex {:e} {:e} {:e}\n", p[0], p[1], p[2]));
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    s.push_str(&format!("endsolid {name}\n"));
    s
}

pub fn from_bytes(bytes: &[u8]) -> Result<TriMesh, GeometryError> {
    if bytes.len() >= 84 {
        let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
        if bytes.len() == 84 + RECORD_LEN * count {
            return parse_binary(&bytes[84..], count);
        }
    }
    if bytes.starts_with(b"solid") {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| GeometryError::MalformedStl("ASCII STL is not valid UTF-8".into()))?;
        return parse_ascii(text);
    }
    Err(GeometryError::MalformedStl(format!(
        "{} bytes is neither a binary STL of consistent length nor ASCII STL",
        bytes.len()
    )))
}

fn parse_binary(records: &[u8], count: usize) -> Result<TriMesh, GeometryError> {
    let mut welder = Welder::default();
    for rec in records.chunks_exact(RECORD_LEN).take(count) {
        let read = |i: usize| f32::from_le_bytes(rec[i * 4..i * 4 + 4].try_into().unwrap());
        let mut tri = [[0f32; 3]; 3];
        for (k, corner) in tri.iter_mut().enumerate() {
            for (c, value) in corner.iter_mut().enumerate() {
                *value = read(3 + 3 * k + c);
            }
        }
        welder.push(tri)?;
    }
    welder.finish()
}

fn parse_ascii(text: &str) -> Result<TriMesh, GeometryError> {
    let mut welder = Welder::default();
    let mut corners: Vec<[f32; 3]> = Vec::with_capacity(3);
    let mut ended = false;
    for (lineno, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("vertex") => {
                let mut p = [0f32; 3];
                for c in &mut p {
                    *c = tokens
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| GeometryError::MalformedStl(format!("bad vertex on line {}", lineno + 1)))?;
                }
                corners.push(p);
            }
            Some("endloop") => {
                let tri: [[f32; 3]; 3] = corners.as_slice().try_into().map_err(|_| {
                    GeometryError::MalformedStl(format!(
                        "facet ending on line {} has {} vertices",
                        lineno + 1,
                        corners.len()
                    ))
                })?;
                welder.push(tri)?;
                corners.clear();
            }
            Some("endsolid") => {
                ended = true;
                break;
            }
            _ => {}
        }
    }
    if !ended {
        return Err(GeometryError::MalformedStl("missing endsolid".into()));
    }
    welder.finish()
}

#[derive(Default)]
struct Welder {
    index: HashMap<[u32; 3], u32>,
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

impl Welder {
    fn push(&mut self, tri: [[f32; 3]; 3]) -> Result<(), GeometryError> {
        let mut ids = [0u32; 3];
        for (id, p) in ids.iter_mut().zip(tri) {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(GeometryError::MalformedStl("non-finite vertex coordinate".into()));
            }
            let key = p.map(f32::to_bits);
            let next = self.vertices.len() as u32;
            *id = *self.index.entry(key).or_insert_with(|| next);
            if *id == next {
                self.vertices.push(Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64));
            }
        }
        if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
            return Err(GeometryError::NonManifold(format!(
                "triangle {} collapses after welding",
                self.triangles.len()
            )));
        }
        self.triangles.push(ids);
        Ok(())
    }

    fn finish(self) -> Result<TriMesh, GeometryError> {
        let mesh = TriMesh::new(self.vertices, self.triangles);
        if let Some(((a, b), n)) = mesh.edge_use_counts().into_iter().find(|&(_, n)| n > 2) {
            return Err(GeometryError::NonManifold(format!(
                "edge ({a}, {b}) is shared by {n} triangles"
            )));
        }
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::unit_cube;
    use crate::geometry::{loft_wing, MeshResolution, WingDesign};

    fn wing() -> TriMesh {
        let d = WingDesign::new(0.806, 1.1963, 0.562, 40.0).unwrap();
        loft_wing(&d, &MeshResolution::new(12, 5)).unwrap()
    }

    fn as_f32(mesh: &TriMesh) -> Vec<[[u32; 3]; 3]> {
        (0..mesh.face_count())
            .map(|f| mesh.corners(f).map(|v| to_f32(&v).map(f32::to_bits)))
            .collect()
    }

    #[test]
    fn binary_round_trip_is_bit_identical() {
        let mesh = wing();
        let bytes = to_binary(&mesh);
        assert_eq!(bytes.len(), 84 + 50 * mesh.face_count());
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back.face_count(), mesh.face_count());
        assert_eq!(as_f32(&back), as_f32(&mesh));
        assert_eq!(back.vertices.len(), mesh.vertices.len());
        assert!(back.is_watertight());
        assert_eq!(to_binary(&back), bytes);
    }

    #[test]
    fn ascii_single_triangle_grammar() {
        let tri = TriMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]);
        let text = to_ascii(&tri, "one");
        for token in [
            "facet normal",
            "outer loop",
            "vertex",
            "endloop",
            "endfacet",
            "endsolid",
        ] {
            assert!(text.contains(token), "missing {token}");
        }
        let back = from_bytes(text.as_bytes()).unwrap();
        assert_eq!(back, tri);
    }

    #[test]
    fn ascii_round_trip_matches_binary() {
        let mesh = wing();
        let a = from_bytes(to_ascii(&mesh, "wing").as_bytes()).unwrap();
        let b = from_bytes(&to_binary(&mesh)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_binary_is_malformed() {
        let bytes = to_binary(&unit_cube());
        assert!(matches!(
            from_bytes(&bytes[..bytes.len() - 7]),
            Err(GeometryError::MalformedStl(_))
        ));
        assert!(from_bytes(b"solid x\n facet normal 0 0 1\n").is_err());
    }

    #[test]
    fn over_shared_edge_is_non_manifold() {
        let mut cube = unit_cube();
        cube.triangles.push([0, 2, 5]);
        assert!(matches!(
            from_bytes(&to_binary(&cube)),
            Err(GeometryError::NonManifold(_))
        ));
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = unit_cube();
        for fmt in [StlFormat::Binary, StlFormat::Ascii] {
            let path = dir.path().join(format!("cube-{fmt:?}.stl"));
            export_stl(&mesh, fmt, &path).unwrap();
            assert_eq!(as_f32(&import_stl(&path).unwrap()), as_f32(&mesh));
        }
        let size = std::fs::metadata(dir.path().join("cube-Binary.stl")).unwrap().len();
        assert_eq!(size, 84 + 50 * 12);
    }
}
