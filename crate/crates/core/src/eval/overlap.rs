use crate::geometry::Vec3;
use crate::mesh::TriangleMesh;
use crate::{Error, Result};

/// Tiny fixed offsets applied to every ray so it does not graze lattice
/// aligned edges and vertices.
const JITTER: [f64; 2] = [1.234_567e-7, 7.654_321e-8];

/// Voxel lattice covering a box; samples sit at voxel centres.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoxelLattice {
    pub origin: Vec3,
    pub voxel: f64,
    pub dims: [usize; 3],
}

impl VoxelLattice {
    pub fn covering(min: Vec3, max: Vec3, voxel: f64) -> Result<Self> {
        if !(voxel > 0.0 && voxel.is_finite()) {
            return Err(Error::invalid(format!("voxel size must be positive, got {voxel}")));
        }
        let dims = [0, 1, 2].map(|a| (((max[a] - min[a]) / voxel).ceil() as usize).max(1));
        let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        if total.is_none_or(|t| t > 1 << 28) {
            return Err(Error::invalid(format!("voxel grid {dims:?} too large for voxel {voxel}")));
        }
        Ok(Self {
            origin: min + Vec3::repeat(0.5 * voxel),
            voxel,
            dims,
        })
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Inside flags for every voxel centre by ray parity along +x. Index is
/// `(k * ny + j) * nx + i`.
pub fn voxelize(mesh: &TriangleMesh, lattice: &VoxelLattice) -> Vec<bool> {
    let [nx, ny, nz] = lattice.dims;
    let h = lattice.voxel;
    let row_y = |j: usize| lattice.origin.y + j as f64 * h + JITTER[0] * h;
    let row_z = |k: usize| lattice.origin.z + k as f64 * h + JITTER[1] * h;
    let mut crossings: Vec<Vec<f64>> = vec![Vec::new(); ny * nz];

    for f in 0..mesh.faces.len() {
        let [a, b, c] = mesh.triangle(f);
        let lo = a.inf(&b).inf(&c);
        let hi = a.sup(&b).sup(&c);
        let j0 = (((lo.y - lattice.origin.y) / h).floor().max(0.0)) as usize;
        let j1 = (((hi.y - lattice.origin.y) / h).ceil().max(0.0) as usize).min(ny.saturating_sub(1));
        let k0 = (((lo.z - lattice.origin.z) / h).floor().max(0.0)) as usize;
        let k1 = (((hi.z - lattice.origin.z) / h).ceil().max(0.0) as usize).min(nz.saturating_sub(1));
        if j0 > j1 || k0 > k1 {
            continue;
        }
        // Signed area of the triangle projected onto the yz plane.
        let det = (b.y - a.y) * (c.z - a.z) - (c.y - a.y) * (b.z - a.z);
        if det == 0.0 {
            continue;
        }
        for k in k0..=k1 {
            let z = row_z(k);
            for j in j0..=j1 {
                let y = row_y(j);
                let u = ((y - a.y) * (c.z - a.z) - (c.y - a.y) * (z - a.z)) / det;
                let v = ((b.y - a.y) * (z - a.z) - (y - a.y) * (b.z - a.z)) / det;
                if u >= 0.0 && v >= 0.0 && u + v <= 1.0 {
                    crossings[k * ny + j].push(a.x + u * (b.x - a.x) + v * (c.x - a.x));
                }
            }
        }
    }

    let mut inside = vec![false; lattice.len()];
    for k in 0..nz {
        for j in 0..ny {
            let xs = &mut crossings[k * ny + j];
            xs.sort_by(f64::total_cmp);
            let mut passed = 0;
            for i in 0..nx {
                let x = lattice.origin.x + i as f64 * h;
                while passed < xs.len() && xs[passed] < x {
                    passed += 1;
                }
                inside[(k * ny + j) * nx + i] = passed % 2 == 1;
            }
        }
    }
    inside
}

/// Dice and Jaccard coefficients of two closed meshes' interiors on a
/// common voxel lattice.
pub fn volumetric_overlap(predicted: &TriangleMesh, reference: &TriangleMesh, voxel: f64) -> Result<(f64, f64)> {
    for (name, m) in [("predicted", predicted), ("reference", reference)] {
        if !m.is_watertight() {
            let open = m.edge_face_counts().values().filter(|&&c| c != 2).count();
            return Err(Error::NotWatertight(format!(
                "{name} mesh has {open} edges not shared by exactly two faces"
            )));
        }
    }
    let (la, ha) = predicted.bounds().expect("watertight meshes have vertices");
    let (lb, hb) = reference.bounds().expect("watertight meshes have vertices");
    let lattice = VoxelLattice::covering(la.inf(&lb), ha.sup(&hb), voxel)?;
    let a = voxelize(predicted, &lattice);
    let b = voxelize(reference, &lattice);
    let (mut na, mut nb, mut both) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.iter().zip(&b) {
        na += x as usize;
        nb += y as usize;
        both += (x && y) as usize;
    }
    if na + nb == 0 {
        return Err(Error::invalid(format!("voxel size {voxel} leaves both interiors empty")));
    }
    let union = na + nb - both;
    let dsc = 2.0 * both as f64 / (na + nb) as f64;
    let iou = both as f64 / union as f64;
    Ok((dsc, iou))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn identical_and_disjoint() {
        let s = shapes::icosphere(Vec3::zeros(), 0.5, 2);
        assert_eq!(volumetric_overlap(&s, &s, 0.05).unwrap(), (1.0, 1.0));
        let far = s.map_vertices(|v| v + Vec3::new(3.0, 0.0, 0.0));
        assert_eq!(volumetric_overlap(&s, &far, 0.05).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn shifted_cubes() {
        let a = shapes::cuboid(Vec3::zeros(), Vec3::repeat(1.0));
        let b = shapes::cuboid(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.5, 1.0, 1.0));
        let (dsc, iou) = volumetric_overlap(&a, &b, 0.05).unwrap();
        assert!((iou - 1.0 / 3.0).abs() < 0.02, "{iou}");
        assert!((dsc - 0.5).abs() < 0.02, "{dsc}");
        assert!((dsc - 2.0 * iou / (1.0 + iou)).abs() < 1e-9);
    }

    #[test]
    fn sphere_volume_from_voxels() {
        let s = shapes::icosphere(Vec3::new(0.1, -0.2, 0.3), 0.5, 4);
        let (lo, hi) = s.bounds().unwrap();
        let lattice = VoxelLattice::covering(lo, hi, 0.02).unwrap();
        let count = voxelize(&s, &lattice).iter().filter(|&&b| b).count();
        let vol = count as f64 * 0.02f64.powi(3);
        assert!((vol - s.signed_volume()).abs() < 0.01 * s.signed_volume(), "{vol}");
    }

    #[test]
    fn torus_hole_is_outside() {
        let t = shapes::torus(0.5, 0.15, 48, 24);
        let (lo, hi) = t.bounds().unwrap();
        let lattice = VoxelLattice::covering(lo, hi, 0.01).unwrap();
        let inside = voxelize(&t, &lattice);
        let at = |p: Vec3| {
            let idx = [0, 1, 2].map(|a| ((p[a] - lattice.origin[a]) / lattice.voxel).round() as usize);
            inside[(idx[2] * lattice.dims[1] + idx[1]) * lattice.dims[0] + idx[0]]
        };
        assert!(!at(Vec3::zeros()));
        assert!(at(Vec3::new(0.5, 0.0, 0.0)));
        assert!(at(Vec3::new(0.0, -0.5, 0.0)));
    }

    #[test]
    fn open_mesh_rejected() {
        let s = shapes::icosphere(Vec3::zeros(), 0.5, 1);
        let open = TriangleMesh { faces: s.faces[1..].to_vec(), ..s.clone() };
        assert!(matches!(volumetric_overlap(&open, &s, 0.05), Err(Error::NotWatertight(_))));
    }
}
