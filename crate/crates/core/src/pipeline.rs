//! Cloud to mesh: voxel downsampling, farthest point sampling,
//! normalization, training and extraction.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::geometry::{farthest_point_sample, normalize_cloud, voxel_downsample, NormalizationTransform, PointCloud};
use crate::mesh::{extract, GridBounds, TriangleMesh};
use crate::train::{fit_observed, FitOutput, TrainConfig, TrainObserver};
use crate::{seed, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructConfig {
    /// Voxel edge in world units; 0 skips voxel downsampling.
    pub voxel_size: f64,
    /// Farthest point sampling target, applied only to larger clouds.
    pub max_points: usize,
    pub resolution: usize,
    /// Half-width of the extraction cube in normalized units.
    pub bounds: f64,
    pub train: TrainConfig,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            voxel_size: 0.5,
            max_points: 20_000,
            resolution: 64,
            bounds: 1.1,
            train: TrainConfig::default(),
        }
    }
}

impl ReconstructConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size >= 0.0 && self.voxel_size.is_finite()) {
            return Err(Error::invalid(format!("voxel_size must be >= 0, got {}", self.voxel_size)));
        }
        if self.max_points == 0 {
            return Err(Error::invalid("max_points must be positive"));
        }
        if self.resolution < crate::mesh::MIN_RESOLUTION {
            return Err(Error::invalid(format!(
                "resolution must be at least {}, got {}",
                crate::mesh::MIN_RESOLUTION,
                self.resolution
            )));
        }
        if !(self.bounds > 0.0 && self.bounds.is_finite()) {
            return Err(Error::invalid(format!("bounds must be positive, got {}", self.bounds)));
        }
        self.train.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Io,
    Geometry,
    Training,
    Meshing,
    Evaluation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Io => "io",
            Stage::Geometry => "geometry",
            Stage::Training => "training",
            Stage::Meshing => "meshing",
            Stage::Evaluation => "evaluation",
        };
        f.write_str(s)
    }
}

/// An error with the pipeline stage it came from.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

pub trait StageContext<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// Wall-clock seconds per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub geometry: f64,
    pub training: f64,
    pub meshing: f64,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    /// Mesh in the input cloud's frame.
    pub mesh: TriangleMesh,
    pub transform: NormalizationTransform,
    /// Downsampled, normalized training cloud.
    pub cloud: PointCloud,
    pub fit: FitOutput<f32>,
    pub timings: StageTimings,
}

/// Voxel downsampling, farthest point sampling down to `max_points`, then
/// normalization into the unit cube.
pub fn prepare_cloud(cloud: &PointCloud, cfg: &ReconstructConfig) -> Result<(PointCloud, NormalizationTransform)> {
    let mut c = if cfg.voxel_size > 0.0 {
        voxel_downsample(cloud, cfg.voxel_size)?
    } else {
        cloud.clone()
    };
    if c.len() > cfg.max_points {
        c = farthest_point_sample(&c, cfg.max_points, seed::derive(cfg.train.seed, seed::stream::FPS))?;
    }
    normalize_cloud(&c)
}

pub fn reconstruct(cloud: &PointCloud, cfg: &ReconstructConfig) -> std::result::Result<Reconstruction, StageError> {
    reconstruct_observed(cloud, cfg, &mut ())
}

pub fn reconstruct_observed(
    cloud: &PointCloud,
    cfg: &ReconstructConfig,
    observer: &mut dyn TrainObserver<f32>,
) -> std::result::Result<Reconstruction, StageError> {
    cfg.validate().stage(Stage::Config)?;
    let mut timings = StageTimings::default();

    let t0 = Instant::now();
    let (normalized, transform) = prepare_cloud(cloud, cfg).stage(Stage::Geometry)?;
    timings.geometry = t0.elapsed().as_secs_f64();
    log::info!("training cloud: {} points (from {})", normalized.len(), cloud.len());

    let t0 = Instant::now();
    let fit = fit_observed::<f32>(&normalized, &cfg.train, observer).stage(Stage::Training)?;
    timings.training = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let mesh = extract(&fit.network, &transform, cfg.resolution, &GridBounds::cube(cfg.bounds)).stage(Stage::Meshing)?;
    timings.meshing = t0.elapsed().as_secs_f64();

    Ok(Reconstruction {
        mesh,
        transform,
        cloud: normalized,
        fit,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::topology_report;
    use crate::geometry::{Frame, Vec3};
    use crate::nn::NetworkConfig;
    use crate::synth::{synth_cloud, CloudMode, SynthShape};

    fn small(iterations: usize) -> ReconstructConfig {
        let mut cfg = ReconstructConfig { voxel_size: 0.0, max_points: 500, resolution: 24, ..Default::default() };
        cfg.train.iterations = iterations;
        cfg.train.batch_size = 128;
        cfg.train.census_probes = 100;
        cfg.train.network = NetworkConfig { hidden_layers: 4, width: 64, skip_layer: Some(2), ..NetworkConfig::default() };
        cfg
    }

    #[test]
    fn zero_iterations_gives_init_sphere_in_world_frame() {
        let shape = SynthShape::Sphere { center: [10.0, -4.0, 2.0], radius: 20.0 };
        let cloud = synth_cloud(&shape, 800, CloudMode::Volumetric, 1).unwrap();
        let r = reconstruct(&cloud, &small(0)).unwrap();
        assert_eq!(r.cloud.len(), 500);
        assert_eq!(r.cloud.frame(), Frame::Normalized);
        assert!(r.fit.history.is_empty());
        let t = topology_report(&r.mesh);
        assert!(t.watertight && t.connected_components == 1, "{:?}", (t.watertight, t.connected_components, &t.genus_per_component));
        // Init sphere of radius ~0.5 in normalized units, mapped back.
        let c = Vec3::new(10.0, -4.0, 2.0);
        let mean_r = r.mesh.vertices.iter().map(|v| (v - c).norm()).sum::<f64>() / r.mesh.vertices.len() as f64;
        let expect = 0.5 * r.transform.scale;
        assert!((mean_r / expect - 1.0).abs() < 0.3, "{mean_r} vs {expect}");
    }

    #[test]
    fn stages_are_tagged() {
        let cloud = PointCloud::world(vec![Vec3::zeros(); 4]).unwrap();
        assert_eq!(reconstruct(&cloud, &small(1)).unwrap_err().stage, Stage::Geometry);
        let mut bad = small(1);
        bad.resolution = 2;
        assert_eq!(reconstruct(&cloud, &bad).unwrap_err().stage, Stage::Config);
    }

    #[test]
    fn deterministic() {
        let cloud = synth_cloud(&SynthShape::sphere(), 400, CloudMode::Volumetric, 2).unwrap();
        let a = reconstruct(&cloud, &small(5)).unwrap();
        let b = reconstruct(&cloud, &small(5)).unwrap();
        assert_eq!(a.mesh, b.mesh);
        assert_eq!(a.fit.history, b.fit.history);
    }
}
