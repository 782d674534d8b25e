use crate::space::{DesignVector, ParameterSpace};

use super::CaseSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub id: String,
    /// Euclidean distance in normalized coordinates.
    pub distance: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(Vec<usize>),
    Split {
        axis: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// Static k-d tree over normalized 6-vectors.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 6]>,
    ids: Vec<String>,
    root: Node,
}

const LEAF: usize = 8;

impl KdTree {
    pub fn build(points: Vec<[f64; 6]>, ids: Vec<String>) -> Self {
        assert_eq!(points.len(), ids.len());
        let idx: Vec<usize> = (0..points.len()).collect();
        let root = Self::node(&points, idx);
        Self { points, ids, root }
    }

    fn node(points: &[[f64; 6]], mut idx: Vec<usize>) -> Node {
        if idx.len() <= LEAF {
            return Node::Leaf(idx);
        }
        let spread = |a: usize| {
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                (lo.min(points[i][a]), hi.max(points[i][a]))
            });
            hi - lo
        };
        let axis = (0..6).max_by(|&a, &b| spread(a).total_cmp(&spread(b))).unwrap();
        if spread(axis) == 0.0 {
            return Node::Leaf(idx);
        }
        idx.sort_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]));
        let mid = idx.len() / 2;
        let value = points[idx[mid]][axis];
        // left holds coordinates <= value, right holds coordinates >= value
        let right = idx.split_off(mid);
        Node::Split {
            axis,
            value,
            left: Box::new(Self::node(points, idx)),
            right: Box::new(Self::node(points, right)),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest point; ties go to the lexicographically lowest id.
    pub fn nearest(&self, query: &[f64; 6]) -> Option<Neighbor> {
        let mut best: Option<(f64, usize)> = None;
        self.search(&self.root, query, &mut best);
        best.map(|(d2, i)| Neighbor {
            index: i,
            id: self.ids[i].clone(),
            distance: d2.sqrt(),
        })
    }

    fn better(&self, cand: (f64, usize), best: Option<(f64, usize)>) -> bool {
        match best {
            None => true,
            Some((bd, bi)) => cand.0 < bd || (cand.0 == bd && self.ids[cand.1] < self.ids[bi]),
        }
    }

    fn search(&self, node: &Node, q: &[f64; 6], best: &mut Option<(f64, usize)>) {
        match node {
            Node::Leaf(idx) => {
                for &i in idx {
                    let d2 = dist2(&self.points[i], q);
                    if self.better((d2, i), *best) {
                        *best = Some((d2, i));
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[*axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // Equal distance may still hold a lower id, so only prune on >.
                if best.is_none_or(|(bd, _)| diff * diff <= bd) {
                    self.search(far, q, best);
                }
            }
        }
    }
}

fn dist2(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest case to `query` in coordinates min-max normalized by `space`.
pub fn nearest_neighbor(query: &DesignVector, cases: &[CaseSpec], space: &ParameterSpace) -> Option<Neighbor> {
    let points = cases.iter().map(|c| space.normalize(&c.vector())).collect();
    let ids = cases.iter().map(|c| c.id.clone()).collect();
    KdTree::build(points, ids).nearest(&space.normalize(query))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doe::sample_uniform;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[[f64; 6]], ids: &[String], q: &[f64; 6]) -> usize {
        let mut best = 0;
        for i in 1..points.len() {
            let (d, bd) = (dist2(&points[i], q), dist2(&points[best], q));
            if d < bd || (d == bd && ids[i] < ids[best]) {
                best = i;
            }
        }
        best
    }

    #[test]
    fn exact_hit_has_zero_distance() {
        let space = ParameterSpace::default();
        let cases = sample_uniform(&space, 200, 5).unwrap();
        let n = nearest_neighbor(&cases[17].vector(), &cases, &space).unwrap();
        assert_eq!(n.id, cases[17].id);
        assert_eq!(n.distance, 0.0);
    }

    #[test]
    fn ties_go_to_the_lower_id() {
        let ids = vec!["b".to_string(), "a".to_string(), "c".to_string()];
        let pts = vec![[0.0; 6], [1.0, 0.0, 0.0, 0.0, 0.0, 0.0], [0.5; 6]];
        let tree = KdTree::build(pts, ids);
        let n = tree.nearest(&[0.5, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(n.id, "a");
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // a coarse lattice provokes many exact ties
        let points: Vec<[f64; 6]> = (0..2000)
            .map(|_| std::array::from_fn(|_| (rng.random_range(0..5) as f64) / 4.0))
            .collect();
        let ids: Vec<String> = (0..2000).map(|i| format!("c{:05}", (i * 7919) % 2000)).collect();
        let tree = KdTree::build(points.clone(), ids.clone());
        for _ in 0..1000 {
            let q: [f64; 6] = std::array::from_fn(|_| rng.random::<f64>());
            let n = tree.nearest(&q).unwrap();
            assert_eq!(n.index, brute(&points, &ids, &q));
        }
    }
}
