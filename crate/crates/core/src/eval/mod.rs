//! Mesh scoring: surface distances, volumetric overlap, topology and
//! curvature.

pub mod bvh;
mod curvature;
mod distance;
mod overlap;
mod topology;

pub use bvh::{closest_point_on_triangle, TriangleBvh};
pub use curvature::{
    angle_deficits, curvature_report, gaussian_curvature, kde_at, kde_curve, mixed_areas, scott_bandwidth,
    total_angle_deficit, CurvatureReport, DEFAULT_CURVATURE_RADII,
};
pub use distance::{
    directed_distances, metric_samples, percentile_nearest_rank, sample_surface, surface_distance_metrics, symmetric_distances,
    DirectedStats, SurfaceDistances, DEFAULT_SURFACE_SAMPLES,
};
pub use overlap::{volumetric_overlap, voxelize, VoxelLattice};
pub use topology::{topology_report, ComponentTopology, Genus, TopologyReport};

use serde::{Deserialize, Serialize};

use crate::mesh::TriangleMesh;
use crate::{Error, Result};

/// Voxels along the longest side of the joint bounding box when no voxel
/// size is given.
pub const DEFAULT_VOXELS_PER_SIDE: f64 = 128.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub samples: usize,
    pub seed: u64,
    pub voxel_size: Option<f64>,
    /// Report Chamfer distance over squared point distances.
    pub squared_cd: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SURFACE_SAMPLES,
            seed: 0,
            voxel_size: None,
            squared_cd: false,
        }
    }
}

/// Distances are in the meshes' units (millimetres for world-frame meshes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub asd_mm: f64,
    pub cd_mm: f64,
    pub hd_mm: f64,
    pub hd95_mm: f64,
    /// `None` when either mesh is not watertight.
    pub dsc: Option<f64>,
    pub iou: Option<f64>,
    pub cd_squared: bool,
    pub surface_samples: usize,
    pub seed: u64,
    pub voxel_size: f64,
    pub overlap_note: Option<String>,
}

/// All accuracy metrics of `predicted` against `reference`.
pub fn evaluate(predicted: &TriangleMesh, reference: &TriangleMesh, opts: &MetricOptions) -> Result<MetricReport> {
    let d = surface_distance_metrics(predicted, reference, opts.samples, opts.seed)?;
    let voxel = match opts.voxel_size {
        Some(v) => v,
        None => {
            let (la, ha) = predicted.bounds().ok_or_else(|| Error::invalid("empty predicted mesh"))?;
            let (lb, hb) = reference.bounds().ok_or_else(|| Error::invalid("empty reference mesh"))?;
            (ha.sup(&hb) - la.inf(&lb)).max() / DEFAULT_VOXELS_PER_SIDE
        }
    };
    let (dsc, iou, note) = match volumetric_overlap(predicted, reference, voxel) {
        Ok((dsc, iou)) => (Some(dsc), Some(iou), None),
        Err(e @ Error::NotWatertight(_)) => (None, None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let report = MetricReport {
        asd_mm: d.asd,
        cd_mm: if opts.squared_cd { d.cd_squared } else { d.cd },
        hd_mm: d.hd,
        hd95_mm: d.hd95,
        dsc,
        iou,
        cd_squared: opts.squared_cd,
        surface_samples: opts.samples,
        seed: opts.seed,
        voxel_size: voxel,
        overlap_note: note,
    };
    report.check()?;
    Ok(report)
}

impl MetricReport {
    /// Checks the ordering and overlap identities every report must satisfy.
    pub fn check(&self) -> Result<()> {
        if !(self.hd_mm >= self.hd95_mm && self.hd95_mm >= 0.0 && self.hd_mm >= self.asd_mm && self.asd_mm >= 0.0) {
            return Err(Error::Invariant(format!(
                "distance ordering violated: hd {} hd95 {} asd {}",
                self.hd_mm, self.hd95_mm, self.asd_mm
            )));
        }
        if let (Some(dsc), Some(iou)) = (self.dsc, self.iou) {
            if !(0.0..=1.0).contains(&dsc) || !(0.0..=1.0).contains(&iou) || (dsc - 2.0 * iou / (1.0 + iou)).abs() > 1e-9 {
                return Err(Error::Invariant(format!("overlap identity violated: dsc {dsc} iou {iou}")));
            }
        }
        Ok(())
    }
}
