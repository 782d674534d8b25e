//! Hull vertex detection checked against independent oracles: a dense
//! tableau simplex with Bland's rule, and Andrew's monotone chain in 2D.

#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wingforge::doe::{extreme_points, peel_layers};

/// Dense phase-1 tableau: is `p` a convex combination of `others`?
fn in_hull_dense(p: &[f64], others: &[&[f64]]) -> bool {
    let d = p.len();
    let m = d + 1;
    let n = others.len();
    // columns: n structural, m artificial, then rhs
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for r in 0..m {
        for (j, x) in others.iter().enumerate() {
            t[r][j] = if r < d { x[r] - p[r] } else { 1.0 };
        }
        t[r][n + r] = 1.0;
        t[r][width - 1] = if r < d { 0.0 } else { 1.0 };
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // objective row: minimize sum of artificials, stored as reduced costs
    for j in 0..width {
        let s: f64 = (0..m).map(|r| t[r][j]).sum();
        t[m][j] = if (n..n + m).contains(&j) { 0.0 } else { -s };
    }
    for _ in 0..10_000 {
        let Some(q) = (0..n + m).find(|&j| t[m][j] < -1e-11) else {
            break;
        };
        let mut leave: Option<usize> = None;
        for r in 0..m {
            if t[r][q] > 1e-12 {
                let ratio = t[r][width - 1] / t[r][q];
                leave = match leave {
                    None => Some(r),
                    Some(l) => {
                        let lr = t[l][width - 1] / t[l][q];
                        if ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && basis[r] < basis[l]) {
                            Some(r)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        let r = leave.expect("phase 1 is bounded");
        let piv = t[r][q];
        t[r].iter_mut().for_each(|v| *v /= piv);
        for k in 0..=m {
            if k != r {
                let f = t[k][q];
                if f != 0.0 {
                    for j in 0..width {
                        t[k][j] -= f * t[r][j];
                    }
                }
            }
        }
        basis[r] = q;
    }
    -t[m][width - 1] <= 1e-9
}

fn oracle(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let others: Vec<&[f64]> = points
                .iter()
                .enumerate()
                .filter(|&(j, q)| j != i && q != &points[i])
                .map(|(_, q)| q.as_slice())
                .collect();
            others.is_empty() || !in_hull_dense(&points[i], &others)
        })
        .collect()
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Strict hull vertices in 2D (collinear boundary points excluded).
fn monotone_chain(points: &[Vec<f64>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    let mut hull: Vec<usize> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let order: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in order {
            while hull.len() >= start + 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                if cross(&points[a], &points[b], &points[i]) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull.sort_unstable();
    hull.dedup();
    hull
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

#[test]
fn random_3d_clouds_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for _ in 0..5 {
        let pts = random_points(&mut rng, 200, 3);
        assert_eq!(extreme_points(&pts).unwrap(), oracle(&pts));
    }
}

#[test]
fn planar_clouds_match_monotone_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for n in [3, 10, 50, 200, 500] {
        let pts = random_points(&mut rng, n, 2);
        assert_eq!(extreme_points(&pts).unwrap(), monotone_chain(&pts));
    }
}

#[test]
fn lattice_points_match_monotone_chain() {
    // many collinear boundary points and exact duplicates
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let pts: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.random_range(0..6) as f64, rng.random_range(0..6) as f64])
            .collect();
        let mut unique = pts.clone();
        unique.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        unique.dedup();
        let hull: Vec<Vec<f64>> = monotone_chain(&unique).into_iter().map(|i| unique[i].clone()).collect();
        let expected: Vec<usize> = (0..pts.len()).filter(|&i| hull.contains(&pts[i])).collect();
        assert_eq!(extreme_points(&pts).unwrap(), expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn extreme_points_match_oracle(seed in any::<u64>(), n in 5usize..120, d in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = random_points(&mut rng, n, d);
        prop_assert_eq!(extreme_points(&pts).unwrap(), oracle(&pts));
    }

    #[test]
    fn deeper_layers_lie_inside_outer_ones(seed in any::<u64>(), n in 10usize..80, d in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = random_points(&mut rng, n, d);
        let layers = peel_layers(&pts).unwrap();
        for k in 1..layers.len() {
            let outer: Vec<usize> = layers[k - 1..].concat();
            for &i in &layers[k] {
                let others: Vec<&[f64]> = outer
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| pts[j].as_slice())
                    .collect();
                prop_assert!(in_hull_dense(&pts[i], &others));
            }
        }
    }
}
