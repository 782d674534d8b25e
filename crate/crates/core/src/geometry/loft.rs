use nalgebra::Matrix3x4;
use serde::{Deserialize, Serialize};

use super::mesh::{TriMesh, Vec3};
use super::naca::section_loop;
use super::{GeometryError, MeshResolution, WingDesign};

/// Sweep is measured along the leading edge.
pub const SWEEP_CONVENTION: &str = "leading-edge";

const METADATA_VERSION: u32 = 1;

/// Local chord, leading-edge offset and spanwise position of a section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionTransform {
    pub chord: f64,
    pub x_offset: f64,
    pub y: f64,
}

pub fn section_transform(design: &WingDesign, s: f64) -> Result<SectionTransform, GeometryError> {
    design.validate()?;
    if !(0.0..=1.0).contains(&s) {
        return Err(GeometryError::OutsideSpan(s));
    }
    Ok(transform_unchecked(design, s))
}

fn transform_unchecked(design: &WingDesign, s: f64) -> SectionTransform {
    SectionTransform {
        chord: design.c_r * (1.0 + (design.taper - 1.0) * s),
        x_offset: s * design.b * design.sweep_rad().tan(),
        y: s * design.b,
    }
}

/// Trapezoidal planform area of the modeled half-wing, `b c_r (1 + λ) / 2`.
pub fn planform_area(design: &WingDesign) -> f64 {
    design.b * design.c_r * (1.0 + design.taper) / 2.0
}

/// Unit-chord recipe of one vertex: span fraction and airfoil coordinates.
#[derive(Debug, Clone, Copy)]
struct Station {
    s: f64,
    xc: f64,
    zc: f64,
}

fn stations(resolution: &MeshResolution) -> Vec<Station> {
    let profile = section_loop(resolution.n_chord);
    let last = (resolution.n_span - 1) as f64;
    let mut out = Vec::with_capacity(resolution.vertex_count());
    for j in 0..resolution.n_span {
        let s = if j + 1 == resolution.n_span {
            1.0
        } else {
            j as f64 / last
        };
        out.extend(profile.iter().map(|&(xc, zc)| Station { s, xc, zc }));
    }
    // cap centers at mid-chord of root and tip
    out.push(Station {
        s: 0.0,
        xc: 0.5,
        zc: 0.0,
    });
    out.push(Station {
        s: 1.0,
        xc: 0.5,
        zc: 0.0,
    });
    out
}

fn triangles(resolution: &MeshResolution) -> Vec<[u32; 3]> {
    let n_loop = resolution.loop_len();
    let upper_quads = resolution.n_chord - 1;
    let idx = |j: usize, k: usize| (j * n_loop + k % n_loop) as u32;
    let mut tris = Vec::with_capacity(resolution.triangle_count());
    for j in 0..resolution.n_span - 1 {
        for k in 0..n_loop {
            let (a, b) = (idx(j, k), idx(j, k + 1));
            let (d, c) = (idx(j + 1, k), idx(j + 1, k + 1));
            // Diagonals always join the inboard leading-edge-ward corner to the
            // outboard trailing-edge-ward corner, so the mesh is mirror
            // symmetric about z = 0.
            if k < upper_quads {
                tris.push([a, d, b]);
                tris.push([b, d, c]);
            } else {
                tris.push([a, d, c]);
                tris.push([a, c, b]);
            }
        }
    }
    let root_center = (resolution.n_span * n_loop) as u32;
    let tip_center = root_center + 1;
    let tip = resolution.n_span - 1;
    for k in 0..n_loop {
        tris.push([root_center, idx(0, k), idx(0, k + 1)]);
        tris.push([tip_center, idx(tip, k + 1), idx(tip, k)]);
    }
    tris
}

/// Lofts the NACA0012 section along the span into a closed triangle mesh.
///
/// Vertex layout: `n_span` section loops of `2 n_chord - 2` points each
/// (trailing edge first, then upper surface forward, then lower surface aft),
/// followed by the root and tip cap centers.
pub fn loft_wing(design: &WingDesign, resolution: &MeshResolution) -> Result<TriMesh, GeometryError> {
    design.validate()?;
    resolution.validate()?;
    let tan_sweep = design.sweep_rad().tan();
    let vertices = stations(resolution)
        .into_iter()
        .map(|st| {
            let chord = design.c_r * (1.0 + (design.taper - 1.0) * st.s);
            Vec3::new(
                st.s * design.b * tan_sweep + chord * st.xc,
                st.s * design.b,
                chord * st.zc,
            )
        })
        .collect();
    Ok(TriMesh::new(vertices, triangles(resolution)))
}

/// Per-vertex derivatives of position with respect to
/// `(c_r, b, lambda, Lambda)`. The sweep column is per degree.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshJacobian {
    pub vertices: Vec<Matrix3x4<f64>>,
}

impl MeshJacobian {
    pub fn column(&self, vertex: usize, parameter: usize) -> Vec3 {
        self.vertices[vertex].column(parameter).into_owned()
    }
}

pub fn mesh_jacobian(design: &WingDesign, resolution: &MeshResolution) -> Result<MeshJacobian, GeometryError> {
    design.validate()?;
    resolution.validate()?;
    let tan_sweep = design.sweep_rad().tan();
    let dtan_ddeg = (1.0 + tan_sweep * tan_sweep) * std::f64::consts::PI / 180.0;
    let vertices = stations(resolution)
        .into_iter()
        .map(|st| {
            let chord_scale = 1.0 + (design.taper - 1.0) * st.s;
            let d_cr = Vec3::new(chord_scale * st.xc, 0.0, chord_scale * st.zc);
            let d_b = Vec3::new(st.s * tan_sweep, st.s, 0.0);
            let d_taper = Vec3::new(design.c_r * st.s * st.xc, 0.0, design.c_r * st.s * st.zc);
            let d_sweep = Vec3::new(st.s * design.b * dtan_ddeg, 0.0, 0.0);
            Matrix3x4::from_columns(&[d_cr, d_b, d_taper, d_sweep])
        })
        .collect();
    Ok(MeshJacobian { vertices })
}

/// JSON sidecar written next to exported STL files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshMetadata {
    pub format_version: u32,
    pub design: WingDesign,
    pub resolution: MeshResolution,
    pub sweep_convention: String,
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub units: String,
}

impl MeshMetadata {
    pub fn new(design: &WingDesign, resolution: &MeshResolution) -> Self {
        Self {
            format_version: METADATA_VERSION,
            design: *design,
            resolution: *resolution,
            sweep_convention: SWEEP_CONVENTION.to_string(),
            vertex_count: resolution.vertex_count(),
            triangle_count: resolution.triangle_count(),
            units: "m".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_scan_wing() -> WingDesign {
        WingDesign::new(0.806, 1.1963, 0.562, 40.0).unwrap()
    }

    #[test]
    fn taper_halves_tip_chord() {
        let d = WingDesign::new(1.0, 1.0, 0.5, 0.0).unwrap();
        let t = section_transform(&d, 1.0).unwrap();
        assert_eq!((t.chord, t.x_offset, t.y), (0.5, 0.0, 1.0));
    }

    #[test]
    fn forty_five_degree_sweep_offsets_by_span() {
        let d = WingDesign::new(1.0, 1.0, 1.0, 45.0).unwrap();
        let t = section_transform(&d, 1.0).unwrap();
        assert!((t.x_offset - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mid_span_section_of_scan_wing() {
        let t = section_transform(&paper_scan_wing(), 0.5).unwrap();
        // chord = 0.806 * (1 - 0.438 * 0.5), x = 0.59815 * tan(40 deg)
        assert!((t.chord - 0.629_486).abs() < 1e-4);
        assert!((t.y - 0.59815).abs() < 1e-12);
        assert!((t.x_offset - 0.501_904).abs() < 1e-4);
        assert!(section_transform(&paper_scan_wing(), 1.2).is_err());
    }

    #[test]
    fn planform_areas() {
        assert_eq!(planform_area(&WingDesign::new(1.0, 2.0, 0.5, 25.0).unwrap()), 1.5);
        assert_eq!(planform_area(&WingDesign::new(1.0, 1.0, 1.0, 10.0).unwrap()), 1.0);
        assert!((planform_area(&paper_scan_wing()) - 0.753_152).abs() < 1e-4);
    }

    #[test]
    fn counts_match_resolution() {
        for (nc, ns) in [(4, 2), (5, 3), (17, 9), (64, 32)] {
            let res = MeshResolution::new(nc, ns);
            let mesh = loft_wing(&paper_scan_wing(), &res).unwrap();
            assert_eq!(mesh.vertices.len(), res.vertex_count());
            assert_eq!(mesh.triangles.len(), res.triangle_count());
        }
    }

    #[test]
    fn coarse_resolution_is_rejected() {
        let d = paper_scan_wing();
        assert!(matches!(
            loft_wing(&d, &MeshResolution::new(3, 8)),
            Err(GeometryError::ResolutionTooCoarse { .. })
        ));
        assert!(loft_wing(&d, &MeshResolution::new(8, 1)).is_err());
    }

    #[test]
    fn mesh_is_closed_and_outward() {
        for res in [MeshResolution::new(4, 2), MeshResolution::new(33, 12)] {
            let mesh = loft_wing(&paper_scan_wing(), &res).unwrap();
            assert!(mesh.is_watertight());
            assert!(mesh.is_consistently_oriented());
            assert!(mesh.signed_volume() > 0.0);
            assert!(mesh.faces().iter().all(|f| f.area > 0.0));
            let total = mesh.total_area();
            assert!(mesh.area_vector_sum().norm() <= 1e-9 * total);
        }
    }

    #[test]
    fn root_on_symmetry_plane_and_tip_at_span() {
        let d = paper_scan_wing();
        let res = MeshResolution::new(16, 6);
        let mesh = loft_wing(&d, &res).unwrap();
        let n_loop = res.loop_len();
        assert!(mesh.vertices[..n_loop].iter().all(|v| v.y == 0.0));
        let tip = &mesh.vertices[(res.n_span - 1) * n_loop..res.n_span * n_loop];
        assert!(tip.iter().all(|v| v.y == d.b));
        let tip_chord = tip.iter().map(|v| v.x).fold(f64::NEG_INFINITY, f64::max)
            - tip.iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
        assert!((tip_chord - d.tip_chord()).abs() < 1e-12);
    }

    #[test]
    fn jacobian_special_entries() {
        let d = WingDesign::new(0.9, 1.3, 0.6, 0.0).unwrap();
        let res = MeshResolution::new(8, 4);
        let jac = mesh_jacobian(&d, &res).unwrap();
        let n_loop = res.loop_len();
        // leading edge of the tip section is loop index n_chord - 1
        let tip_le = (res.n_span - 1) * n_loop + res.n_chord - 1;
        let expected = d.b * std::f64::consts::PI / 180.0;
        assert!((jac.column(tip_le, 3).x - expected).abs() < 1e-15);
        for v in 0..n_loop {
            assert_eq!(jac.column(v, 1), Vec3::zeros());
        }
    }

    #[test]
    fn metadata_records_convention() {
        let meta = MeshMetadata::new(&paper_scan_wing(), &MeshResolution::default());
        let json = serde_json::to_value(&meta).unwrap();
        assert_eq!(json["sweep_convention"], "leading-edge");
        assert_eq!(json["design"]["Lambda"], 40.0);
    }
}
