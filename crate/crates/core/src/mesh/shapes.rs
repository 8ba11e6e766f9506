//! Reference meshes of analytic shapes.

use std::collections::HashMap;

use super::TriangleMesh;
use crate::geometry::Vec3;

/// Unit right tetrahedron at the origin, outward winding.
pub fn tetrahedron() -> TriangleMesh {
    TriangleMesh {
        vertices: vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()],
        faces: vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
    }
}

/// Axis-aligned box, two triangles per side.
pub fn cuboid(min: Vec3, max: Vec3) -> TriangleMesh {
    let vertices = (0..8)
        .map(|c| {
            Vec3::new(
                if c & 1 == 0 { min.x } else { max.x },
                if c & 2 == 0 { min.y } else { max.y },
                if c & 4 == 0 { min.z } else { max.z },
            )
        })
        .collect();
    let faces = vec![
        [0, 2, 1],
        [1, 2, 3],
        [4, 5, 6],
        [5, 7, 6],
        [0, 1, 4],
        [1, 5, 4],
        [2, 6, 3],
        [3, 6, 7],
        [0, 4, 2],
        [2, 4, 6],
        [1, 3, 5],
        [3, 7, 5],
    ];
    TriangleMesh { vertices, faces }
}

/// Subdivided icosahedron projected onto a sphere.
pub fn icosphere(center: Vec3, radius: f64, subdivisions: usize) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vec3::from(*v).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh {
        vertices: vertices.into_iter().map(|v| center + v * radius).collect(),
        faces,
    }
}

/// Torus around the z axis: `ring` is the distance from the axis to the
/// tube centre, `tube` the tube radius.
pub fn torus(ring: f64, tube: f64, around: usize, across: usize) -> TriangleMesh {
    let (nu, nv) = (around.max(3), across.max(3));
    let tau = std::f64::consts::TAU;
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = tau * i as f64 / nu as f64;
        for j in 0..nv {
            let v = tau * j as f64 / nv as f64;
            let r = ring + tube * v.cos();
            vertices.push(Vec3::new(r * u.cos(), r * u.sin(), tube * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh { vertices, faces }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_is_closed_and_outward() {
        for s in 0..4 {
            let m = icosphere(Vec3::new(1.0, 2.0, 3.0), 0.5, s);
            assert_eq!(m.faces.len(), 20 * 4usize.pow(s as u32));
            assert!(m.is_watertight());
            assert_eq!(m.euler_characteristic(), 2);
            assert!(m.signed_volume() > 0.0);
        }
        let fine = icosphere(Vec3::zeros(), 1.0, 5);
        assert!((fine.signed_volume() - 4.0 / 3.0 * std::f64::consts::PI).abs() < 0.01);
    }

    #[test]
    fn torus_is_genus_one_and_outward() {
        let m = torus(0.5, 0.15, 48, 24);
        assert!(m.is_watertight());
        assert_eq!(m.euler_characteristic(), 0);
        let exact = 2.0 * std::f64::consts::PI.powi(2) * 0.5 * 0.15 * 0.15;
        assert!((m.signed_volume() - exact).abs() < 0.02 * exact);
    }

    #[test]
    fn cuboid_volume() {
        let m = cuboid(Vec3::zeros(), Vec3::new(1.0, 2.0, 3.0));
        assert!(m.is_watertight());
        assert!((m.signed_volume() - 6.0).abs() < 1e-12);
    }
}
