use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bvh::TriangleBvh;
use crate::geometry::Vec3;
use crate::mesh::TriangleMesh;
use crate::seed;
use crate::{Error, Result};

pub const DEFAULT_SURFACE_SAMPLES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDistances {
    pub asd: f64,
    pub cd: f64,
    /// Chamfer distance over squared point distances.
    pub cd_squared: f64,
    pub hd: f64,
    pub hd95: f64,
}

/// Order-independent fingerprint of a mesh's connectivity. Seeds the
/// surface sampling so results do not depend on argument order or on
/// rigid motions of the mesh.
fn connectivity_fingerprint(mesh: &TriangleMesh) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01B3;
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    let mut feed = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(mesh.vertices.len() as u64);
    feed(mesh.faces.len() as u64);
    for f in &mesh.faces {
        for &v in f {
            feed(v as u64);
        }
    }
    h
}

/// `n` points drawn uniformly by area over the mesh surface.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<Vec<Vec3>> {
    if mesh.faces.is_empty() {
        return Err(Error::invalid("cannot sample an empty mesh"));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::invalid(format!("mesh surface area {total} cannot be sampled")));
    }
    let mut rng = seed::rng(seed);
    Ok((0..n)
        .map(|_| {
            let x = rng.random::<f64>() * total;
            let f = cumulative.partition_point(|&c| c <= x).min(cumulative.len() - 1);
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let s = r1.sqrt();
            let [a, b, c] = mesh.triangle(f);
            a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2)
        })
        .collect())
}

/// Nearest-rank percentile: the `ceil(p n)`-th smallest value.
pub fn percentile_nearest_rank(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Mean, squared mean, maximum and 95th percentile of one directed
/// distance set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectedStats {
    pub mean: f64,
    pub mean_squared: f64,
    pub max: f64,
    pub p95: f64,
}

impl DirectedStats {
    pub fn from_distances(d: &[f64]) -> Self {
        let n = d.len() as f64;
        Self {
            mean: d.iter().sum::<f64>() / n,
            mean_squared: d.iter().map(|x| x * x).sum::<f64>() / n,
            max: d.iter().copied().fold(0.0, f64::max),
            p95: percentile_nearest_rank(d, 0.95),
        }
    }
}

/// Combines the two directed statistics symmetrically.
pub fn symmetric_distances(ab: &DirectedStats, ba: &DirectedStats) -> SurfaceDistances {
    SurfaceDistances {
        asd: 0.5 * (ab.mean + ba.mean),
        cd: 0.5 * (ab.mean + ba.mean),
        cd_squared: 0.5 * (ab.mean_squared + ba.mean_squared),
        hd: ab.max.max(ba.max),
        hd95: ab.p95.max(ba.p95),
    }
}

pub fn directed_distances(from: &[Vec3], to: &TriangleBvh) -> Vec<f64> {
    from.iter().map(|p| to.distance(p)).collect()
}

/// The surface points [`surface_distance_metrics`] draws on `mesh` for a
/// given metric seed.
pub fn metric_samples(mesh: &TriangleMesh, samples: usize, seed: u64) -> Result<Vec<Vec3>> {
    let seed = seed::derive(seed, seed::stream::SURFACE_SAMPLES);
    sample_surface(mesh, samples, seed ^ connectivity_fingerprint(mesh))
}

/// ASD, CD, HD and HD95 between two surfaces from `samples` area-weighted
/// points on each.
pub fn surface_distance_metrics(
    predicted: &TriangleMesh,
    reference: &TriangleMesh,
    samples: usize,
    seed: u64,
) -> Result<SurfaceDistances> {
    if predicted.is_empty() || reference.is_empty() {
        return Err(Error::invalid("surface distances need two non-empty meshes"));
    }
    if samples == 0 {
        return Err(Error::invalid("surface distances need at least one sample"));
    }
    let pa = metric_samples(predicted, samples, seed)?;
    let pb = metric_samples(reference, samples, seed)?;
    let ab = DirectedStats::from_distances(&directed_distances(&pa, &TriangleBvh::new(reference)));
    let ba = DirectedStats::from_distances(&directed_distances(&pb, &TriangleBvh::new(predicted)));
    Ok(symmetric_distances(&ab, &ba))
}
