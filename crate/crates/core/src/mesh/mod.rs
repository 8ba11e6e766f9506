//! Triangle meshes, scalar lattices and marching cubes.

mod grid;
mod marching;
pub mod shapes;
mod tables;

pub use grid::{eval_grid, FnField, GridBounds, ScalarField, ScalarGrid};
pub use marching::{extract, iso_baseline, marching_cubes, MIN_RESOLUTION};

use std::collections::{BTreeMap, HashMap};

use crate::geometry::Vec3;
use crate::{Error, Result};

/// Indexed triangle mesh. Faces wind counter-clockwise seen from outside
/// when produced by this crate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.vertices.iter().find(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite(format!("mesh vertex {v:?}")));
        }
        let n = self.vertices.len();
        for (i, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::invalid(format!("face {i} {f:?} indexes past {n} vertices")));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized face normal, twice the face area in length.
    pub fn face_cross(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_cross(f).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Volume enclosed by a closed mesh, positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                a.dot(&b.cross(&c))
            })
            .sum::<f64>()
            / 6.0
    }

    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
    }

    pub fn flipped(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            faces: self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect(),
        }
    }

    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Merges vertices closer than `tol` into their lowest-index
    /// representative and drops faces that collapse onto a repeated index.
    /// Returns the welded mesh and the number of dropped faces.
    pub fn welded(&self, tol: f64) -> (Self, usize) {
        let cell = |v: &Vec3| v.map(|c| (c / tol).floor() as i64);
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut remap = Vec::with_capacity(self.vertices.len());
        let mut vertices: Vec<Vec3> = Vec::new();
        for v in &self.vertices {
            let c = cell(v);
            let mut found = None;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(list) = buckets.get(&[c.x + dx, c.y + dy, c.z + dz]) {
                            if let Some(&hit) = list.iter().find(|&&w| (vertices[w] - v).norm() <= tol) {
                                found = Some(found.map_or(hit, |f: usize| f.min(hit)));
                            }
                        }
                    }
                }
            }
            remap.push(found.unwrap_or_else(|| {
                vertices.push(*v);
                buckets.entry([c.x, c.y, c.z]).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            }));
        }
        let before = self.faces.len();
        let faces: Vec<[usize; 3]> = self
            .faces
            .iter()
            .map(|f| f.map(|i| remap[i]))
            .filter(|f| f[0] != f[1] && f[1] != f[2] && f[0] != f[2])
            .collect();
        let dropped = before - faces.len();
        (Self { vertices, faces }, dropped)
    }

    /// Number of faces on each undirected edge, keyed `(low, high)`.
    pub fn edge_face_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Every edge borders exactly two faces.
    pub fn is_watertight(&self) -> bool {
        !self.faces.is_empty() && self.edge_face_counts().values().all(|&c| c == 2)
    }

    /// Euler characteristic over the vertices referenced by faces.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for f in &self.faces {
            for &v in f {
                used[v] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edge_face_counts().len() as i64 + self.faces.len() as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tetrahedron_measures() {
        let t = shapes::tetrahedron();
        assert!(t.is_watertight());
        assert_eq!(t.euler_characteristic(), 2);
        assert!((t.signed_volume() - 1.0 / 6.0).abs() < 1e-15);
        assert!((t.flipped().signed_volume() + 1.0 / 6.0).abs() < 1e-15);
        let open = TriangleMesh { faces: t.faces[..3].to_vec(), ..t.clone() };
        assert!(!open.is_watertight());
    }

    #[test]
    fn welding_merges_duplicates() {
        let t = shapes::tetrahedron();
        // Triangle soup: three fresh vertices per face.
        let soup = TriangleMesh {
            vertices: t.faces.iter().flat_map(|f| f.map(|i| t.vertices[i] + Vec3::repeat(1e-12))).collect(),
            faces: (0..t.faces.len()).map(|f| [3 * f, 3 * f + 1, 3 * f + 2]).collect(),
        };
        let (w, dropped) = soup.welded(1e-9);
        assert_eq!((w.vertices.len(), dropped), (4, 0));
        assert!(w.is_watertight());
        let (same, _) = t.welded(1e-9);
        assert_eq!(same, t);
        let collapsed = TriangleMesh { vertices: vec![Vec3::zeros(), Vec3::zeros(), Vec3::x()], faces: vec![[0, 1, 2]] };
        assert_eq!(collapsed.welded(1e-9).1, 1);
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(TriangleMesh::new(vec![Vec3::zeros()], vec![[0, 0, 1]]).is_err());
        assert!(TriangleMesh::new(vec![Vec3::new(f64::NAN, 0.0, 0.0)], vec![]).is_err());
    }
}
