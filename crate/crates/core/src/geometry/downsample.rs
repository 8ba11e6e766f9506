use std::collections::BTreeMap;

use rand::Rng;

use super::kdtree::dist2;
use super::{PointCloud, Vec3};
use crate::{seed, Error, Result};

/// Replaces the points of every occupied `cell`-sized voxel by their centroid.
///
/// Voxels are indexed by `floor(coord / cell)` and emitted in ascending
/// lexicographic `(ix, iy, iz)` order.
pub fn voxel_downsample(cloud: &PointCloud, cell: f64) -> Result<PointCloud> {
    if !(cell > 0.0) || !cell.is_finite() {
        return Err(Error::invalid(format!("voxel cell size must be positive, got {cell}")));
    }
    let mut cells: BTreeMap<(i64, i64, i64), (Vec3, usize)> = BTreeMap::new();
    for p in cloud.points() {
        let key = (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        );
        let entry = cells.entry(key).or_insert((Vec3::zeros(), 0));
        entry.0 += p;
        entry.1 += 1;
    }
    let points = cells
        .into_values()
        .map(|(sum, n)| sum / n as f64)
        .collect();
    PointCloud::new(points, cloud.frame())
}

/// Farthest point sampling with a seeded random first pick.
pub fn farthest_point_sample(cloud: &PointCloud, n: usize, seed: u64) -> Result<PointCloud> {
    cloud.require_non_empty()?;
    let first = seed::rng(seed).random_range(0..cloud.len());
    farthest_point_sample_from(cloud, n, first)
}

/// Farthest point sampling starting from point `first`.
///
/// Each further pick maximizes the distance to the already selected set;
/// ties go to the lowest index. Output is in selection order.
pub fn farthest_point_sample_from(cloud: &PointCloud, n: usize, first: usize) -> Result<PointCloud> {
    let pts = cloud.points();
    if n == 0 || n > pts.len() {
        return Err(Error::invalid(format!(
            "sample count {n} must be in 1..={}",
            pts.len()
        )));
    }
    if first >= pts.len() {
        return Err(Error::invalid(format!("first index {first} out of range")));
    }
    let mut min_d2 = vec![f64::INFINITY; pts.len()];
    let mut selected = Vec::with_capacity(n);
    let mut current = first;
    for _ in 0..n {
        selected.push(pts[current]);
        min_d2[current] = f64::NEG_INFINITY;
        let anchor = pts[current];
        let mut best = usize::MAX;
        let mut best_d2 = f64::NEG_INFINITY;
        for (i, (d, p)) in min_d2.iter_mut().zip(pts).enumerate() {
            if *d == f64::NEG_INFINITY {
                continue;
            }
            let nd = dist2(p, &anchor);
            if nd < *d {
                *d = nd;
            }
            if *d > best_d2 {
                best_d2 = *d;
                best = i;
            }
        }
        current = best;
    }
    PointCloud::new(selected, cloud.frame())
}
