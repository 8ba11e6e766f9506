//! Gaussian query sampling around cloud points.
//!
//! Each cloud point `p_i` gets `l` queries `p_i + e` with `e` drawn from an
//! isotropic Gaussian whose per-axis standard deviation is the distance from
//! `p_i` to its k-th nearest neighbour. Every query is then bound to its
//! nearest cloud point, the target its projection is pulled towards.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{PointCloud, SpatialIndex, Vec3};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QuerySet {
    pub queries: Vec<Vec3>,
    /// Nearest cloud point per query; empty until [`assign_targets`] runs.
    pub target_index: Vec<usize>,
    /// Generating cloud point per query.
    pub source_index: Vec<usize>,
    /// Per cloud point standard deviation actually used (zeros substituted).
    pub sigma: Vec<f64>,
}

impl QuerySet {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn has_targets(&self) -> bool {
        self.target_index.len() == self.queries.len()
    }
}

/// Distance from each point to its k-th nearest neighbour, not counting the
/// point itself. Coincident points count, so duplicates can yield zero.
pub fn compute_local_sigma(cloud: &PointCloud, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k >= cloud.len() {
        return Err(Error::invalid(format!(
            "k = {k} must be in 1..{} for a cloud of {} points",
            cloud.len(),
            cloud.len()
        )));
    }
    let index = SpatialIndex::new(cloud.points());
    cloud
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let nn = index.knn(p, k + 1)?;
            Ok(nn
                .iter()
                .filter(|n| n.index != i)
                .nth(k - 1)
                .expect("k + 1 neighbours minus self leaves k")
                .distance)
        })
        .collect()
}

/// Draws `l` Gaussian queries per cloud point.
///
/// Point `i` uses ChaCha stream `i` under `seed`, so the result does not
/// depend on how generation is partitioned. Zero sigmas are replaced by the
/// smallest positive sigma in the cloud.
pub fn generate_queries(cloud: &PointCloud, sigmas: &[f64], l: usize, seed: u64) -> Result<QuerySet> {
    cloud.require_non_empty()?;
    if sigmas.len() != cloud.len() {
        return Err(Error::invalid(format!(
            "{} sigmas for {} points",
            sigmas.len(),
            cloud.len()
        )));
    }
    if l == 0 {
        return Err(Error::invalid("queries per point must be at least 1"));
    }
    if let Some(bad) = sigmas.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(Error::invalid(format!("invalid sigma {bad}")));
    }
    let floor = sigmas
        .iter()
        .copied()
        .filter(|&s| s > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return Err(Error::invalid("all sigmas are zero"));
    }
    let sigma: Vec<f64> = sigmas.iter().map(|&s| if s > 0.0 { s } else { floor }).collect();

    let n = cloud.len();
    let mut queries = Vec::with_capacity(n * l);
    let mut source_index = Vec::with_capacity(n * l);
    for (i, (p, &s)) in cloud.points().iter().zip(&sigma).enumerate() {
        queries.extend(sample_around(p, s, l, seed, i as u64));
        source_index.extend(std::iter::repeat_n(i, l));
    }
    Ok(QuerySet {
        queries,
        target_index: Vec::new(),
        source_index,
        sigma,
    })
}

fn sample_around(p: &Vec3, sigma: f64, l: usize, seed: u64, stream: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..l)
        .map(|_| {
            let e: [f64; 3] = [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ];
            p + Vec3::from(e) * sigma
        })
        .collect()
}

/// Binds each query to its nearest cloud point (ties to the lowest index).
pub fn assign_targets(index: &SpatialIndex, qs: QuerySet) -> Result<QuerySet> {
    let target_index = qs
        .queries
        .iter()
        .map(|q| index.nearest(q).map(|n| n.index))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuerySet { target_index, ..qs })
}
