use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Vec3;
use crate::{Error, Result};

const LEAF_SIZE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Static k-d tree over a point set.
///
/// Results are exactly those of a linear scan ordered by `(distance, index)`:
/// ties always resolve to the lowest point index. Immutable after
/// construction, so shared references may query from any thread.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Vec3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[inline]
pub(crate) fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

/// Max-heap entry; the top is the worst of the current candidates.
#[derive(Clone, Copy, Debug)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

impl SpatialIndex {
    pub fn new(points: &[Vec3]) -> Self {
        let mut index = SpatialIndex {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            index.build(0, points.len());
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let (mut lo, mut hi) = (self.points[self.order[start]], self.points[self.order[start]]);
        for &i in &self.order[start..end] {
            lo = lo.inf(&self.points[i]);
            hi = hi.sup(&self.points[i]);
        }
        let extent = hi - lo;
        let axis = extent.imax();
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest points, ascending by distance then index.
    pub fn knn(&self, query: &Vec3, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 || k > self.points.len() {
            return Err(Error::invalid(format!(
                "k = {k} must be in 1..={}",
                self.points.len()
            )));
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        Ok(out
            .into_iter()
            .map(|c| Neighbor {
                index: c.index,
                distance: c.d2.sqrt(),
            })
            .collect())
    }

    pub fn nearest(&self, query: &Vec3) -> Result<Neighbor> {
        Ok(self.knn(query, 1)?[0])
    }

    fn search(&self, node: usize, q: &Vec3, k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate {
                        d2: dist2(&self.points[i], q),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap holds k items") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, heap);
                // Equal plane distance must still be visited: it may hold a
                // tie with a lower index.
                let full = heap.len() == k;
                if !full || diff * diff <= heap.peek().map_or(f64::INFINITY, |c| c.d2) {
                    self.search(far, q, k, heap);
                }
            }
        }
    }

    /// Indices of all points within `radius` (inclusive), ascending by index.
    pub fn within_radius(&self, query: &Vec3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.points.is_empty() {
            return out;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf { start, end } => {
                    out.extend(
                        self.order[start..end]
                            .iter()
                            .copied()
                            .filter(|&i| dist2(&self.points[i], query) <= r2),
                    );
                }
                Node::Split {
                    axis,
                    value,
                    left,
                    right,
                } => {
                    let diff = query[axis] - value;
                    if diff <= radius {
                        stack.push(left);
                    }
                    if diff >= -radius {
                        stack.push(right);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_knn(points: &[Vec3], q: &Vec3, k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (dx, dy, dz) = (p.x - q.x, p.y - q.y, p.z - q.z);
                (dx * dx + dy * dy + dz * dz, i)
            })
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.into_iter().take(k).map(|(d2, i)| (i, d2.sqrt())).collect()
    }

    #[test]
    fn self_query_distance_zero() {
        let pts = vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 5.0, 6.0)];
        let idx = SpatialIndex::new(&pts);
        let n = idx.knn(&pts[1], 1).unwrap();
        assert_eq!(n, vec![Neighbor { index: 1, distance: 0.0 }]);
    }

    #[test]
    fn collinear_k2() {
        let pts = vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        let idx = SpatialIndex::new(&pts);
        let n = idx.knn(&Vec3::zeros(), 2).unwrap();
        assert_eq!(n[0], Neighbor { index: 0, distance: 0.0 });
        assert_eq!(n[1], Neighbor { index: 1, distance: 1.0 });
    }

    #[test]
    fn k_too_large_rejected() {
        let idx = SpatialIndex::new(&[Vec3::zeros()]);
        assert!(idx.knn(&Vec3::zeros(), 2).is_err());
        assert!(idx.knn(&Vec3::zeros(), 0).is_err());
    }

    #[test]
    fn ties_break_to_lowest_index() {
        // Many duplicates spread across leaves.
        let mut pts = vec![Vec3::new(1.0, 0.0, 0.0); 40];
        pts.extend((0..40).map(|i| Vec3::new(-1.0, i as f64, 0.0)));
        let idx = SpatialIndex::new(&pts);
        let n = idx.knn(&Vec3::new(1.0, 0.0, 0.0), 5).unwrap();
        let ids: Vec<usize> = n.iter().map(|x| x.index).collect();
        assert_eq!(ids, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn radius_query_matches_scan() {
        let pts: Vec<Vec3> = (0..300)
            .map(|i| {
                let t = i as f64 * 0.37;
                Vec3::new(t.sin(), (1.3 * t).cos(), (0.7 * t).sin())
            })
            .collect();
        let idx = SpatialIndex::new(&pts);
        let q = Vec3::new(0.1, 0.2, -0.1);
        let expected: Vec<usize> = (0..pts.len())
            .filter(|&i| (pts[i] - q).norm_squared() <= 0.25)
            .collect();
        assert_eq!(idx.within_radius(&q, 0.5), expected);
    }

    fn cloud_strategy() -> impl Strategy<Value = Vec<Vec3>> {
        // Coarse grid coordinates produce plenty of exact distance ties.
        prop::collection::vec((-5i32..5, -5i32..5, -5i32..5), 1..200).prop_map(|v| {
            v.into_iter()
                .map(|(x, y, z)| Vec3::new(x as f64 * 0.5, y as f64 * 0.5, z as f64 * 0.5))
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 64, rng_seed: proptest::test_runner::RngSeed::Fixed(11), ..ProptestConfig::default() })]
        #[test]
        fn knn_equals_brute_force(pts in cloud_strategy(), q in (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), k in 1usize..8) {
            let q = Vec3::new(q.0, q.1, q.2);
            let k = k.min(pts.len());
            let idx = SpatialIndex::new(&pts);
            let got: Vec<(usize, f64)> = idx.knn(&q, k).unwrap().into_iter().map(|n| (n.index, n.distance)).collect();
            prop_assert_eq!(got, brute_knn(&pts, &q, k));
        }
    }
}
