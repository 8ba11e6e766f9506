use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::geometry::{SpatialIndex, Vec3};
use crate::mesh::TriangleMesh;
use crate::{Error, Result};

/// Ball radii for curvature averaging on normalized meshes.
pub const DEFAULT_CURVATURE_RADII: [f64; 3] = [0.0045, 0.0195, 0.0255];

/// Grid points for the density curve are capped at this count.
const MAX_KDE_POINTS: usize = 1 << 22;
/// Kernel support in bandwidths, on each side.
const KDE_WINDOW: f64 = 8.0;
/// Curve margin beyond the extreme samples, in bandwidths.
const KDE_MARGIN: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub radius: f64,
    /// Ball-averaged Gaussian curvature per vertex.
    pub vertex_curvature: Vec<f64>,
    pub bandwidth: f64,
    pub kde_x: Vec<f64>,
    pub kde_density: Vec<f64>,
}

fn angle(at: &Vec3, p: &Vec3, q: &Vec3) -> f64 {
    let (u, v) = (p - at, q - at);
    u.cross(&v).norm().atan2(u.dot(&v))
}

/// `2 pi` minus the sum of incident corner angles, per vertex.
pub fn angle_deficits(mesh: &TriangleMesh) -> Vec<f64> {
    let mut deficit = vec![TAU; mesh.vertices.len()];
    for f in &mesh.faces {
        let p = f.map(|i| mesh.vertices[i]);
        for k in 0..3 {
            deficit[f[k]] -= angle(&p[k], &p[(k + 1) % 3], &p[(k + 2) % 3]);
        }
    }
    deficit
}

/// Sum of angle deficits over the vertices used by faces.
pub fn total_angle_deficit(mesh: &TriangleMesh) -> f64 {
    let mut used = vec![false; mesh.vertices.len()];
    for f in &mesh.faces {
        for &v in f {
            used[v] = true;
        }
    }
    angle_deficits(mesh).iter().zip(&used).filter(|(_, &u)| u).map(|(d, _)| d).sum()
}

/// Mixed Voronoi area per vertex (Meyer et al. 2003): Voronoi regions for
/// non-obtuse triangles, area fractions for obtuse ones.
pub fn mixed_areas(mesh: &TriangleMesh) -> Vec<f64> {
    let mut area = vec![0.0; mesh.vertices.len()];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let p = f.map(|i| mesh.vertices[i]);
        let total = mesh.face_area(fi);
        if total == 0.0 {
            continue;
        }
        let angles = [0, 1, 2].map(|k| angle(&p[k], &p[(k + 1) % 3], &p[(k + 2) % 3]));
        if let Some(obtuse) = angles.iter().position(|&a| a > PI / 2.0) {
            for k in 0..3 {
                area[f[k]] += if k == obtuse { total / 2.0 } else { total / 4.0 };
            }
            continue;
        }
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            // Edge opposite vertex j is (k, i); opposite vertex i is (k, j).
            let cot_j = 1.0 / angles[j].tan();
            let cot_i = 1.0 / angles[i].tan();
            area[f[k]] += ((p[k] - p[i]).norm_squared() * cot_j + (p[k] - p[j]).norm_squared() * cot_i) / 8.0;
        }
    }
    area
}

/// Angle deficit over mixed area, per vertex.
pub fn gaussian_curvature(mesh: &TriangleMesh) -> Vec<f64> {
    angle_deficits(mesh)
        .iter()
        .zip(mixed_areas(mesh))
        .map(|(d, a)| if a > 0.0 { d / a } else { 0.0 })
        .collect()
}

/// Scott's rule `sigma * n^(-1/5)` with the sample standard deviation.
pub fn scott_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return 1.0;
    }
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let h = var.sqrt() * n.powf(-0.2);
    if h > 0.0 {
        h
    } else {
        // Identical samples: any small positive width keeps the curve defined.
        1e-6 * mean.abs().max(1.0)
    }
}

/// Gaussian kernel density of `samples` at `x`.
pub fn kde_at(samples: &[f64], bandwidth: f64, x: f64) -> f64 {
    let norm = 1.0 / (samples.len() as f64 * bandwidth * (TAU).sqrt());
    samples.iter().map(|s| (-0.5 * ((x - s) / bandwidth).powi(2)).exp()).sum::<f64>() * norm
}

/// Density curve on a regular grid with spacing at most a third of the
/// bandwidth, extending five bandwidths past the extreme samples.
pub fn kde_curve(samples: &[f64], bandwidth: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::invalid("density estimate needs samples"));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - KDE_MARGIN * bandwidth;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + KDE_MARGIN * bandwidth;
    let mut dx = bandwidth / 3.0;
    let mut count = ((hi - lo) / dx).ceil() as usize + 1;
    if count > MAX_KDE_POINTS {
        count = MAX_KDE_POINTS;
        dx = (hi - lo) / (count - 1) as f64;
    }
    let xs: Vec<f64> = (0..count).map(|i| lo + i as f64 * dx).collect();
    let mut density = vec![0.0; count];
    let norm = 1.0 / (samples.len() as f64 * bandwidth * TAU.sqrt());
    let reach = (KDE_WINDOW * bandwidth / dx).ceil() as isize;
    for &s in samples {
        let centre = ((s - lo) / dx).round() as isize;
        let first = (centre - reach).max(0) as usize;
        let last = ((centre + reach).max(0) as usize).min(count - 1);
        for i in first..=last {
            let z = (xs[i] - s) / bandwidth;
            density[i] += (-0.5 * z * z).exp() * norm;
        }
    }
    Ok((xs, density))
}

/// Per-vertex Gaussian curvature averaged over a Euclidean ball, plus a
/// kernel density estimate of the averaged values.
pub fn curvature_report(mesh: &TriangleMesh, radius: f64, bandwidth: Option<f64>) -> Result<CurvatureReport> {
    if !mesh.is_watertight() {
        return Err(Error::NotWatertight("curvature needs a closed manifold mesh".into()));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius must be non-negative, got {radius}")));
    }
    let raw = gaussian_curvature(mesh);
    let index = SpatialIndex::new(&mesh.vertices);
    let averaged: Vec<f64> = mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let near = index.within_radius(v, radius);
            if near.is_empty() {
                raw[i]
            } else {
                near.iter().map(|&n| raw[n]).sum::<f64>() / near.len() as f64
            }
        })
        .collect();
    let h = bandwidth.unwrap_or_else(|| scott_bandwidth(&averaged));
    let (kde_x, kde_density) = kde_curve(&averaged, h)?;
    Ok(CurvatureReport {
        radius,
        vertex_curvature: averaged,
        bandwidth: h,
        kde_x,
        kde_density,
    })
}
