use std::f64::consts::PI;

use super::GeometryError;

/// Half-thickness `y_t / c` of the NACA0012 section at `x / c`.
///
/// Uses the closed trailing-edge coefficient (-0.1036) so that the thickness
/// vanishes at `x / c = 1`.
pub fn naca0012_half_thickness(x_over_c: f64) -> Result<f64, GeometryError> {
    if !(0.0..=1.0).contains(&x_over_c) {
        return Err(GeometryError::OutsideAirfoil(x_over_c));
    }
    Ok(half_thickness(x_over_c))
}

pub(crate) fn half_thickness(x: f64) -> f64 {
    let poly = 0.2969 * x.sqrt() + x * (-0.1260 + x * (-0.3516 + x * (0.2843 + x * -0.1036)));
    let t = 0.6 * poly;
    // The closed-TE polynomial sums to ~1e-17 at x = 1; pin it.
    if x == 1.0 {
        0.0
    } else {
        t
    }
}

/// Cosine-clustered chordwise stations in `[0, 1]`, dense near both edges.
pub fn cosine_stations(n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == 0 {
                0.0
            } else if i == n - 1 {
                1.0
            } else {
                0.5 * (1.0 - (PI * i as f64 / last).cos())
            }
        })
        .collect()
}

/// Closed section loop in unit-chord coordinates `(x/c, z/c)`.
///
/// Starts at the trailing edge, runs forward along the upper surface to the
/// leading edge and back along the lower surface. The loop has
/// `2 * n_chord - 2` points.
pub(crate) fn section_loop(n_chord: usize) -> Vec<(f64, f64)> {
    let xs = cosine_stations(n_chord);
    let mut pts = Vec::with_capacity(2 * n_chord - 2);
    for &x in xs.iter().rev() {
        pts.push((x, half_thickness(x)));
    }
    for &x in &xs[1..n_chord - 1] {
        pts.push((x, -half_thickness(x)));
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_and_trailing_edge_are_closed() {
        assert_eq!(naca0012_half_thickness(0.0).unwrap(), 0.0);
        assert!(naca0012_half_thickness(1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn thickness_at_thirty_percent_chord() {
        // 0.6 * (0.2969*sqrt(0.3) - 0.126*0.3 - 0.3516*0.09 + 0.2843*0.027 - 0.1036*0.0081)
        let by_hand = 0.6 * (0.2969 * 0.547_722_557_505_166_1 - 0.0378 - 0.031_644 + 0.007_676_1 - 0.000_839_16);
        let t = naca0012_half_thickness(0.3).unwrap();
        assert!((t - 0.060007).abs() < 1e-5, "{t}");
        assert!((t - by_hand).abs() < 1e-12);
    }

    #[test]
    fn rejects_points_off_the_chord() {
        assert!(matches!(
            naca0012_half_thickness(-0.01),
            Err(GeometryError::OutsideAirfoil(_))
        ));
        assert!(naca0012_half_thickness(1.5).is_err());
        assert!(naca0012_half_thickness(f64::NAN).is_err());
    }

    #[test]
    fn maximum_thickness_is_twelve_percent() {
        let max = (0..=10_000)
            .map(|i| half_thickness(i as f64 / 10_000.0))
            .fold(0.0, f64::max);
        assert!((2.0 * max - 0.12).abs() < 5e-4, "{max}");
    }

    #[test]
    fn loop_is_mirror_symmetric() {
        let n = 9;
        let pts = section_loop(n);
        assert_eq!(pts.len(), 2 * n - 2);
        assert_eq!(pts[0], (1.0, 0.0));
        assert_eq!(pts[n - 1], (0.0, 0.0));
        for j in 1..n - 1 {
            let upper = pts[n - 1 - j];
            let lower = pts[n - 1 + j];
            assert_eq!(upper.0, lower.0);
            assert_eq!(upper.1, -lower.1);
        }
    }
}
