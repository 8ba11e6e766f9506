use crate::geometry::Vec3;
use crate::mesh::TriangleMesh;

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision
/// Detection, 5.1.5).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[derive(Clone, Copy, Debug)]
struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn merge(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&o.min),
            max: self.max.sup(&o.max),
        }
    }

    fn dist2(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for a in 0..3 {
            let v = if p[a] < self.min[a] {
                self.min[a] - p[a]
            } else if p[a] > self.max[a] {
                p[a] - self.max[a]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

const LEAF_SIZE: usize = 4;

/// Bounding volume hierarchy over a mesh's triangles for exact
/// point-to-surface distance queries.
#[derive(Clone, Debug)]
pub struct TriangleBvh {
    triangles: Vec<[Vec3; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl TriangleBvh {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let triangles: Vec<[Vec3; 3]> = (0..mesh.faces.len()).map(|f| mesh.triangle(f)).collect();
        let mut order: Vec<usize> = (0..triangles.len()).collect();
        let centroids: Vec<Vec3> = triangles.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut nodes = Vec::new();
        if !triangles.is_empty() {
            build(&triangles, &centroids, &mut order, 0, triangles.len(), &mut nodes);
        }
        Self { triangles, order, nodes }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Nearest surface point and the face it lies on.
    pub fn closest(&self, p: &Vec3) -> Option<(Vec3, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, Vec3::zeros(), usize::MAX);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            if self.nodes[n].bounds().dist2(p) > best.0 {
                continue;
            }
            match &self.nodes[n] {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.order[*start..*end] {
                        let [a, b, c] = &self.triangles[f];
                        let q = closest_point_on_triangle(p, a, b, c);
                        let d = (q - p).norm_squared();
                        if d < best.0 || (d == best.0 && f < best.2) {
                            best = (d, q, f);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let (dl, dr) = (self.nodes[*left].bounds().dist2(p), self.nodes[*right].bounds().dist2(p));
                    // Visit the nearer child first.
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        Some((best.1, best.2))
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.closest(p).map_or(f64::INFINITY, |(q, _)| (q - p).norm())
    }
}

fn build(
    triangles: &[[Vec3; 3]],
    centroids: &[Vec3],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &f in &order[start..end] {
        for v in &triangles[f] {
            bounds.grow(v);
        }
        cbounds.grow(&centroids[f]);
    }
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return id;
    }
    let extent = cbounds.max - cbounds.min;
    let axis = extent.imax();
    let mid = (start + end) / 2;
    order[start..end].sort_by(|&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
    });
    nodes.push(Node::Leaf { bounds, start, end });
    let left = build(triangles, centroids, order, start, mid, nodes);
    let right = build(triangles, centroids, order, mid, end, nodes);
    let merged = nodes[left].bounds().merge(nodes[right].bounds());
    nodes[id] = Node::Inner { bounds: merged, left, right };
    id
}

/// Brute-force nearest distance over every face.
pub fn brute_force_distance(mesh: &TriangleMesh, p: &Vec3) -> f64 {
    (0..mesh.faces.len())
        .map(|f| {
            let [a, b, c] = mesh.triangle(f);
            (closest_point_on_triangle(p, &a, &b, &c) - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use proptest::prelude::*;

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = (Vec3::zeros(), Vec3::x(), Vec3::y());
        assert_eq!(closest_point_on_triangle(&Vec3::new(-1.0, -1.0, 0.0), &a, &b, &c), a);
        assert_eq!(closest_point_on_triangle(&Vec3::new(2.0, -0.1, 0.0), &a, &b, &c), b);
        assert_eq!(closest_point_on_triangle(&Vec3::new(0.25, 0.25, 3.0), &a, &b, &c), Vec3::new(0.25, 0.25, 0.0));
        let e = closest_point_on_triangle(&Vec3::new(0.5, -2.0, 1.0), &a, &b, &c);
        assert!((e - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        let h = closest_point_on_triangle(&Vec3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((h - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn sphere_distances() {
        let m = shapes::icosphere(Vec3::zeros(), 1.0, 3);
        let bvh = TriangleBvh::new(&m);
        for p in [Vec3::new(3.0, 0.0, 0.0), Vec3::new(0.0, -0.2, 0.1), Vec3::new(0.4, 0.4, -0.9)] {
            assert!((bvh.distance(&p) - brute_force_distance(&m, &p)).abs() < 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 64, rng_seed: proptest::test_runner::RngSeed::Fixed(17), ..ProptestConfig::default() })]

        #[test]
        fn matches_brute_force_on_random_soups(
            tris in prop::collection::vec(prop::array::uniform3(prop::array::uniform3(-1.0f64..1.0)), 1..100),
            queries in prop::collection::vec(prop::array::uniform3(-2.0f64..2.0), 1..20),
        ) {
            let vertices: Vec<Vec3> = tris.iter().flat_map(|t| t.iter().map(|v| Vec3::from(*v))).collect();
            let faces: Vec<[usize; 3]> = (0..tris.len()).map(|i| [3 * i, 3 * i + 1, 3 * i + 2]).collect();
            let m = TriangleMesh { vertices, faces };
            let bvh = TriangleBvh::new(&m);
            for q in queries {
                let q = Vec3::from(q);
                prop_assert_eq!(bvh.distance(&q), brute_force_distance(&m, &q));
            }
        }
    }
}
