use serde::{Deserialize, Serialize};

use super::{Frame, PointCloud, Vec3};
use crate::mesh::TriangleMesh;
use crate::{Error, Result};

/// Uniform similarity mapping world points into `[-1, 1]^3`:
/// `normalized = (world - center) / scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTransform {
    pub center: [f64; 3],
    pub scale: f64,
}

impl NormalizationTransform {
    pub fn new(center: Vec3, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid(format!(
                "normalization needs a finite center and positive scale, got scale {scale}"
            )));
        }
        Ok(Self {
            center: center.into(),
            scale,
        })
    }

    pub fn identity() -> Self {
        Self {
            center: [0.0; 3],
            scale: 1.0,
        }
    }

    pub fn center(&self) -> Vec3 {
        Vec3::from(self.center)
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        (p - self.center()) / self.scale
    }

    pub fn invert(&self, p: &Vec3) -> Vec3 {
        p * self.scale + self.center()
    }
}

/// Centers a cloud on its centroid and divides by the largest absolute
/// centered coordinate, so every coordinate lands in `[-1, 1]` and at least
/// one reaches magnitude 1.
pub fn normalize_cloud(cloud: &PointCloud) -> Result<(PointCloud, NormalizationTransform)> {
    if cloud.len() < 2 {
        return Err(Error::DegenerateCloud(format!(
            "normalization needs at least 2 points, got {}",
            cloud.len()
        )));
    }
    let n = cloud.len() as f64;
    let center = cloud.points().iter().fold(Vec3::zeros(), |acc, p| acc + p) / n;
    let scale = cloud
        .points()
        .iter()
        .map(|p| (p - center).amax())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DegenerateCloud("all points coincide".into()));
    }
    let t = NormalizationTransform::new(center, scale)?;
    let points = cloud
        .points()
        .iter()
        .map(|p| {
            let q = t.apply(p);
            // Guard the last ulp so the extreme coordinate stays inside [-1, 1].
            q.map(|c| c.clamp(-1.0, 1.0))
        })
        .collect();
    Ok((PointCloud::new(points, Frame::Normalized)?, t))
}

/// Maps a mesh from the normalized frame back to world coordinates.
pub fn denormalize_mesh(mesh: &TriangleMesh, t: &NormalizationTransform) -> TriangleMesh {
    TriangleMesh {
        vertices: mesh.vertices.iter().map(|v| t.invert(v)).collect(),
        faces: mesh.faces.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::world(pts.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect()).unwrap()
    }

    #[test]
    fn symmetric_pair() {
        let (c, t) = normalize_cloud(&cloud(&[[-2.0, 0.0, 0.0], [2.0, 0.0, 0.0]])).unwrap();
        assert_eq!(c.points(), &[Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)]);
        assert_eq!(t.center, [0.0; 3]);
        assert_eq!(t.scale, 2.0);
        assert_eq!(c.frame(), Frame::Normalized);
    }

    #[test]
    fn already_normalized_fixed_point() {
        let pts = [
            [-1.0, -1.0, -1.0],
            [1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0],
            [-1.0, 1.0, -1.0],
        ];
        let (c, t) = normalize_cloud(&cloud(&pts)).unwrap();
        assert_eq!(t.scale, 1.0);
        assert_eq!(c.points(), cloud(&pts).points());
    }

    #[test]
    fn offset_pair() {
        let (c, t) = normalize_cloud(&cloud(&[[10.0, 10.0, 10.0], [12.0, 10.0, 10.0]])).unwrap();
        assert_eq!(t.center, [11.0, 10.0, 10.0]);
        assert_eq!(t.scale, 1.0);
        assert_eq!(c.points(), &[Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)]);
    }

    #[test]
    fn coincident_points_rejected() {
        let err = normalize_cloud(&cloud(&[[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::DegenerateCloud(_)));
        assert!(normalize_cloud(&cloud(&[[1.0, 1.0, 1.0]])).is_err());
    }

    #[test]
    fn range_and_round_trip() {
        let mut rng = seed::rng(5);
        let pts: Vec<Vec3> = (0..300)
            .map(|_| Vec3::new(rng.random_range(-40.0..90.0), rng.random_range(3.0..7.0), rng.random_range(-1e3..-9e2)))
            .collect();
        let raw = PointCloud::world(pts.clone()).unwrap();
        let (c, t) = normalize_cloud(&raw).unwrap();
        let max = c.points().iter().map(|p| p.amax()).fold(0.0, f64::max);
        assert!(max <= 1.0);
        assert!((max - 1.0).abs() < 1e-15);
        let mesh = TriangleMesh {
            vertices: c.points().to_vec(),
            faces: vec![],
        };
        let back = denormalize_mesh(&mesh, &t);
        for (a, b) in back.vertices.iter().zip(&pts) {
            assert!((a - b).norm() <= 1e-9 * b.norm());
        }
    }

    #[test]
    fn denormalize_scales_and_keeps_faces() {
        let mesh = TriangleMesh {
            vertices: vec![Vec3::new(1.0, 0.0, 0.0), Vec3::zeros(), Vec3::new(0.0, 1.0, 0.0)],
            faces: vec![[0, 1, 2]],
        };
        let t = NormalizationTransform::new(Vec3::zeros(), 2.0).unwrap();
        let out = denormalize_mesh(&mesh, &t);
        assert_eq!(out.vertices[0], Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(out.faces, mesh.faces);
        assert_eq!(denormalize_mesh(&mesh, &NormalizationTransform::identity()), mesh);
    }
}
