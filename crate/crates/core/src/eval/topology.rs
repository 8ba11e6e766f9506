use std::collections::BTreeMap;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::mesh::TriangleMesh;

/// Genus of one connected component, or a marker for components that are
/// not closed 2-manifolds. Serializes as a number or `"non-manifold"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Genus {
    Closed(i64),
    NonManifold,
}

const NON_MANIFOLD: &str = "non-manifold";

impl Serialize for Genus {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Genus::Closed(g) => s.serialize_i64(*g),
            Genus::NonManifold => s.serialize_str(NON_MANIFOLD),
        }
    }
}

impl<'de> Deserialize<'de> for Genus {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(g) => Ok(Genus::Closed(g)),
            Raw::Text(t) if t == NON_MANIFOLD => Ok(Genus::NonManifold),
            Raw::Text(t) => Err(de::Error::custom(format!("expected a genus or {NON_MANIFOLD:?}, got {t:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentTopology {
    pub faces: usize,
    pub vertices: usize,
    pub edges: usize,
    pub euler_characteristic: i64,
    pub genus: Genus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub connected_components: usize,
    pub genus_per_component: Vec<Genus>,
    pub watertight: bool,
    pub components: Vec<ComponentTopology>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so labels do not depend on union order.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Connected components over edge-sharing faces, with Euler characteristic
/// and genus per component.
pub fn topology_report(mesh: &TriangleMesh) -> TopologyReport {
    let mut edge_faces: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (fi, f) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    let mut uf = UnionFind::new(mesh.faces.len());
    for faces in edge_faces.values() {
        for w in faces.windows(2) {
            uf.union(w[0], w[1]);
        }
    }

    // Components ordered by their smallest face index.
    let mut label: BTreeMap<usize, usize> = BTreeMap::new();
    let mut face_comp = vec![0usize; mesh.faces.len()];
    for (fi, slot) in face_comp.iter_mut().enumerate() {
        let root = uf.find(fi);
        let next = label.len();
        *slot = *label.entry(root).or_insert(next);
    }
    let n = label.len();
    let mut faces = vec![0usize; n];
    let mut edges = vec![0usize; n];
    let mut manifold = vec![true; n];
    let mut verts: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (fi, f) in mesh.faces.iter().enumerate() {
        faces[face_comp[fi]] += 1;
        verts[face_comp[fi]].extend_from_slice(f);
    }
    for fs in edge_faces.values() {
        let c = face_comp[fs[0]];
        edges[c] += 1;
        if fs.len() != 2 {
            manifold[c] = false;
        }
    }
    let components: Vec<ComponentTopology> = (0..n)
        .map(|c| {
            let v = &mut verts[c];
            v.sort_unstable();
            v.dedup();
            let chi = v.len() as i64 - edges[c] as i64 + faces[c] as i64;
            let genus = if manifold[c] && chi % 2 == 0 && chi <= 2 {
                Genus::Closed((2 - chi) / 2)
            } else {
                Genus::NonManifold
            };
            ComponentTopology {
                faces: faces[c],
                vertices: v.len(),
                edges: edges[c],
                euler_characteristic: chi,
                genus,
            }
        })
        .collect();
    TopologyReport {
        connected_components: n,
        genus_per_component: components.iter().map(|c| c.genus).collect(),
        watertight: n > 0 && manifold.iter().all(|&m| m),
        components,
    }
}
