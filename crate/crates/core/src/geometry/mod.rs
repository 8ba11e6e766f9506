//! Point clouds in world (millimetre) and normalized space.

mod downsample;
mod kdtree;
mod normalize;
mod sweep;

pub use downsample::{farthest_point_sample, farthest_point_sample_from, voxel_downsample};
pub use kdtree::{Neighbor, SpatialIndex};
pub use normalize::{denormalize_mesh, normalize_cloud, NormalizationTransform};
pub use sweep::{build_cloud_from_sweep, pixel_to_world, Mask};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

/// An affine 4x4 transform. The last row is exactly `(0, 0, 0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose(Matrix4<f64>);

impl Pose {
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let last = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if last != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::invalid(format!(
                "pose is not affine: last row is {last:?}"
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("pose has non-finite entries"));
        }
        Ok(Pose(m))
    }

    pub fn from_row_major(values: &[f64; 16]) -> Result<Self> {
        Self::new(Matrix4::from_row_slice(values))
    }

    pub fn identity() -> Self {
        Pose(Matrix4::identity())
    }

    pub fn translation(t: Vec3) -> Self {
        Pose(Matrix4::new_translation(&t))
    }

    pub fn scaling(s: f64) -> Self {
        Pose(Matrix4::new_nonuniform_scaling(&Vec3::new(s, s, s)))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = self.0[(r, c)];
            }
        }
        out
    }

    /// `self · other`; applying the result equals applying `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose(self.0 * other.0)
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        let h = self.0 * p.push(1.0);
        Vec3::new(h.x, h.y, h.z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    World,
    Normalized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec3>,
    frame: Frame,
}

impl PointCloud {
    /// Rejects clouds containing non-finite coordinates.
    pub fn new(points: Vec<Vec3>, frame: Frame) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { points, frame })
    }

    pub fn world(points: Vec<Vec3>) -> Result<Self> {
        Self::new(points, Frame::World)
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec3> {
        self.points
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub(crate) fn require_non_empty(&self) -> Result<()> {
        if self.points.is_empty() {
            Err(Error::EmptyCloud)
        } else {
            Ok(())
        }
    }

    /// Axis-aligned bounds `(min, max)`; `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.points.first()?;
        Some(self.points.iter().fold((first, first), |(lo, hi), p| {
            (lo.inf(p), hi.sup(p))
        }))
    }
}
