use crate::geometry::{section_transform, TriMesh, WingDesign};

use super::AeroError;

/// Chordwise distribution of a per-face quantity at one span station.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionProfile {
    pub y_over_b: f64,
    /// Local chord at the station, used for normalization (m).
    pub chord: f64,
    /// Leading-edge x at the station (m).
    pub x_offset: f64,
    /// `(x/c, value)` on faces with `n_z >= 0`, ascending in `x/c`.
    pub upper: Vec<(f64, f64)>,
    /// `(x/c, value)` on faces with `n_z < 0`, ascending in `x/c`.
    pub lower: Vec<(f64, f64)>,
}

/// Extracts the section of `values` at span fraction `y_over_b`.
///
/// Faces are selected whose centroid lies within half a spanwise cell of the
/// station; each centroid's `x` is normalized by the chord and leading-edge
/// offset at that centroid's own span position. Cap faces are skipped.
pub fn section_profile(
    mesh: &TriMesh,
    design: &WingDesign,
    values: &[f64],
    y_over_b: f64,
) -> Result<SectionProfile, AeroError> {
    if !(y_over_b > 0.0 && y_over_b < 1.0) {
        return Err(AeroError::InvalidInput(format!(
            "y/b = {y_over_b} must lie strictly inside (0, 1)"
        )));
    }
    if values.len() != mesh.face_count() {
        return Err(AeroError::LengthMismatch {
            field: "values",
            expected: mesh.face_count(),
            found: values.len(),
        });
    }
    let station = section_transform(design, y_over_b).map_err(|e| AeroError::InvalidInput(e.to_string()))?;
    let half_band = 0.5 * spanwise_cell(mesh, station.y).ok_or(AeroError::EmptyBand(y_over_b))?;

    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (f, &value) in values.iter().enumerate() {
        let face = mesh.face(f);
        if face.normal.y.abs() > 0.9 || (face.centroid.y - station.y).abs() > half_band {
            continue;
        }
        let s = (face.centroid.y / design.b).clamp(0.0, 1.0);
        let local = section_transform(design, s).map_err(|e| AeroError::InvalidInput(e.to_string()))?;
        let xc = (face.centroid.x - local.x_offset) / local.chord;
        if face.normal.z >= 0.0 {
            upper.push((xc, value));
        } else {
            lower.push((xc, value));
        }
    }
    if upper.is_empty() && lower.is_empty() {
        return Err(AeroError::EmptyBand(y_over_b));
    }
    let by_x = |a: &(f64, f64), b: &(f64, f64)| a.0.total_cmp(&b.0);
    upper.sort_by(by_x);
    lower.sort_by(by_x);
    Ok(SectionProfile {
        y_over_b,
        chord: station.chord,
        x_offset: station.x_offset,
        upper,
        lower,
    })
}

/// Spacing of the vertex span stations around `y`.
fn spanwise_cell(mesh: &TriMesh, y: f64) -> Option<f64> {
    let mut ys: Vec<f64> = mesh.vertices.iter().map(|v| v.y).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let below = ys.iter().rev().find(|&&v| v < y).copied();
    let above = ys.iter().find(|&&v| v > y).copied();
    let on = ys.contains(&y);
    match (below, above) {
        (Some(lo), Some(hi)) if on => Some((y - lo).min(hi - y)),
        (Some(lo), Some(hi)) => Some(hi - lo),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{loft_wing, MeshResolution};

    #[test]
    fn symmetric_field_gives_identical_surfaces() {
        let design = WingDesign::new(0.9, 1.2, 0.6, 25.0).unwrap();
        for res in [MeshResolution::new(24, 11), MeshResolution::new(17, 8)] {
            let mesh = loft_wing(&design, &res).unwrap();
            // a C_p-like field that depends only on x/c, identical on both sides
            let values: Vec<f64> = mesh
                .faces()
                .iter()
                .map(|f| {
                    let t = section_transform(&design, f.centroid.y / design.b).unwrap();
                    let xc = (f.centroid.x - t.x_offset) / t.chord;
                    1.0 - 3.0 * xc.max(0.0).sqrt() + xc
                })
                .collect();
            let p = section_profile(&mesh, &design, &values, 0.5).unwrap();
            assert_eq!(p.upper.len(), p.lower.len());
            assert!(!p.upper.is_empty());
            for (u, l) in p.upper.iter().zip(&p.lower) {
                assert!((u.0 - l.0).abs() < 1e-12);
                assert!((u.1 - l.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalization_uses_local_chord() {
        let design = WingDesign::new(1.0, 1.0, 0.5, 30.0).unwrap();
        let res = MeshResolution::new(20, 9);
        let mesh = loft_wing(&design, &res).unwrap();
        let values = vec![0.0; mesh.face_count()];
        let p = section_profile(&mesh, &design, &values, 0.5).unwrap();
        assert!((p.chord - 0.75).abs() < 1e-12);
        // half a chordwise cell at the coarsest (mid-chord) spacing
        let half_cell = 0.5 * (std::f64::consts::PI / (res.n_chord - 1) as f64) * 0.5;
        for (xc, _) in p.upper.iter().chain(&p.lower) {
            assert!(*xc >= -half_cell && *xc <= 1.0 + half_cell, "{xc}");
        }
        for w in p.upper.windows(2) {
            assert!(w[0].0 <= w[1].0);
        }
    }

    #[test]
    fn rejects_bad_station_and_lengths() {
        let design = WingDesign::new(1.0, 1.0, 0.5, 0.0).unwrap();
        let mesh = loft_wing(&design, &MeshResolution::new(8, 3)).unwrap();
        let values = vec![0.0; mesh.face_count()];
        assert!(section_profile(&mesh, &design, &values, 0.0).is_err());
        assert!(section_profile(&mesh, &design, &values, 1.0).is_err());
        assert!(matches!(
            section_profile(&mesh, &design, &values[1..], 0.5),
            Err(AeroError::LengthMismatch { .. })
        ));
    }
}
