//! Analytic fixtures and the robustness perturbations applied to them.

mod se3;

pub use se3::{perturb_poses, rotation_angle, se3_exp, Se3Noise};

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{pixel_to_world, Mask, PointCloud, Pose, Vec3};
use crate::mesh::{shapes, TriangleMesh};
use crate::{seed, Error, Result};

/// Give up on rejection sampling after this many draws per requested point.
const MAX_REJECTION_RATIO: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SynthShape {
    Sphere { center: [f64; 3], radius: f64 },
    /// Ring around the z axis through `center`.
    Torus { center: [f64; 3], ring: f64, tube: f64 },
    /// Equal spheres centred at `center ± (offset, 0, 0)`.
    TwoSpheres { center: [f64; 3], radius: f64, offset: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudMode {
    Volumetric,
    Surface,
}

impl SynthShape {
    pub fn sphere() -> Self {
        SynthShape::Sphere { center: [0.0; 3], radius: 0.5 }
    }

    pub fn torus() -> Self {
        SynthShape::Torus { center: [0.0; 3], ring: 0.5, tube: 0.15 }
    }

    pub fn two_spheres() -> Self {
        SynthShape::TwoSpheres { center: [0.0; 3], radius: 0.3, offset: 0.45 }
    }

    /// Default fixture by name: `sphere`, `torus` or `two-spheres`.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "sphere" => Ok(Self::sphere()),
            "torus" => Ok(Self::torus()),
            "two-spheres" => Ok(Self::two_spheres()),
            other => Err(Error::invalid(format!(
                "unknown shape {other:?}; expected sphere, torus or two-spheres"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SynthShape::Sphere { radius, .. } => radius > 0.0,
            SynthShape::Torus { ring, tube, .. } => tube > 0.0 && ring > tube,
            SynthShape::TwoSpheres { radius, offset, .. } => radius > 0.0 && offset > radius,
        };
        let finite = match *self {
            SynthShape::Sphere { center, radius } => center.iter().chain([&radius]).all(|v| v.is_finite()),
            SynthShape::Torus { center, ring, tube } => center.iter().chain([&ring, &tube]).all(|v| v.is_finite()),
            SynthShape::TwoSpheres { center, radius, offset } => {
                center.iter().chain([&radius, &offset]).all(|v| v.is_finite())
            }
        };
        if ok && finite {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid shape parameters {self:?}")))
        }
    }

    fn center(&self) -> Vec3 {
        match *self {
            SynthShape::Sphere { center, .. }
            | SynthShape::Torus { center, .. }
            | SynthShape::TwoSpheres { center, .. } => Vec3::from(center),
        }
    }

    /// Exact signed distance: negative inside.
    pub fn sdf(&self, p: &Vec3) -> f64 {
        let d = p - self.center();
        match *self {
            SynthShape::Sphere { radius, .. } => d.norm() - radius,
            SynthShape::Torus { ring, tube, .. } => {
                let radial = d.x.hypot(d.y) - ring;
                radial.hypot(d.z) - tube
            }
            SynthShape::TwoSpheres { radius, offset, .. } => {
                let a = (d - Vec3::new(offset, 0.0, 0.0)).norm();
                let b = (d + Vec3::new(offset, 0.0, 0.0)).norm();
                a.min(b) - radius
            }
        }
    }

    /// Tight axis-aligned bounds.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let c = self.center();
        let half = match *self {
            SynthShape::Sphere { radius, .. } => Vec3::repeat(radius),
            SynthShape::Torus { ring, tube, .. } => Vec3::new(ring + tube, ring + tube, tube),
            SynthShape::TwoSpheres { radius, offset, .. } => Vec3::new(offset + radius, radius, radius),
        };
        (c - half, c + half)
    }

    pub fn volume(&self) -> f64 {
        match *self {
            SynthShape::Sphere { radius, .. } => 4.0 / 3.0 * PI * radius.powi(3),
            SynthShape::Torus { ring, tube, .. } => 2.0 * PI * PI * ring * tube * tube,
            SynthShape::TwoSpheres { radius, .. } => 8.0 / 3.0 * PI * radius.powi(3),
        }
    }

    pub fn genus(&self) -> i64 {
        matches!(self, SynthShape::Torus { .. }) as i64
    }

    pub fn components(&self) -> usize {
        if matches!(self, SynthShape::TwoSpheres { .. }) {
            2
        } else {
            1
        }
    }

    /// Fine polygonal reference surface for metric comparisons.
    pub fn reference_mesh(&self) -> TriangleMesh {
        let c = self.center();
        match *self {
            SynthShape::Sphere { radius, .. } => shapes::icosphere(c, radius, 5),
            SynthShape::Torus { ring, tube, .. } => {
                shapes::torus(ring, tube, 256, 96).map_vertices(|v| v + c)
            }
            SynthShape::TwoSpheres { radius, offset, .. } => {
                let a = shapes::icosphere(c + Vec3::new(offset, 0.0, 0.0), radius, 5);
                let b = shapes::icosphere(c - Vec3::new(offset, 0.0, 0.0), radius, 5);
                let n = a.vertices.len();
                TriangleMesh {
                    vertices: a.vertices.iter().chain(&b.vertices).copied().collect(),
                    faces: a.faces.iter().copied().chain(b.faces.iter().map(|f| f.map(|i| i + n))).collect(),
                }
            }
        }
    }

    /// One point uniform by area on the surface.
    fn surface_point(&self, rng: &mut impl Rng) -> Vec3 {
        let c = self.center();
        let on_sphere = |rng: &mut dyn rand::RngCore, r: f64| loop {
            let g = Vec3::from(std::array::from_fn::<f64, 3, _>(|_| StandardNormal.sample(rng)));
            let n = g.norm();
            if n > 1e-12 {
                return g * (r / n);
            }
        };
        match *self {
            SynthShape::Sphere { radius, .. } => c + on_sphere(rng, radius),
            SynthShape::Torus { ring, tube, .. } => {
                // Area element grows with distance from the axis; reject to match it.
                let across = loop {
                    let v = rng.random::<f64>() * TAU;
                    if rng.random::<f64>() * (ring + tube) <= ring + tube * v.cos() {
                        break v;
                    }
                };
                let around = rng.random::<f64>() * TAU;
                let rho = ring + tube * across.cos();
                c + Vec3::new(rho * around.cos(), rho * around.sin(), tube * across.sin())
            }
            SynthShape::TwoSpheres { radius, offset, .. } => {
                let side = if rng.random::<bool>() { offset } else { -offset };
                c + Vec3::new(side, 0.0, 0.0) + on_sphere(rng, radius)
            }
        }
    }
}

/// `n` points from the shape: uniform in its interior (`sdf <= 0`) or
/// uniform by area on its surface.
pub fn synth_cloud(shape: &SynthShape, n: usize, mode: CloudMode, seed: u64) -> Result<PointCloud> {
    shape.validate()?;
    if n == 0 {
        return Err(Error::invalid("synthetic cloud needs at least one point"));
    }
    let mut rng = seed::rng(seed);
    let points = match mode {
        CloudMode::Surface => (0..n).map(|_| shape.surface_point(&mut rng)).collect(),
        CloudMode::Volumetric => {
            let (lo, hi) = shape.bounds();
            let mut out = Vec::with_capacity(n);
            let mut draws = 0usize;
            while out.len() < n {
                draws += 1;
                if draws > n.saturating_mul(MAX_REJECTION_RATIO) {
                    return Err(Error::Invariant("rejection sampling made no progress".into()));
                }
                let p = Vec3::from(std::array::from_fn::<f64, 3, _>(|a| lo[a] + rng.random::<f64>() * (hi[a] - lo[a])));
                if shape.sdf(&p) <= 0.0 {
                    out.push(p);
                }
            }
            out
        }
    };
    PointCloud::world(points)
}

/// Appends `level` points uniform in the cloud's bounding box grown by 20%
/// (10% of the extent on each side).
pub fn inject_outliers(cloud: &PointCloud, level: usize, seed: u64) -> Result<PointCloud> {
    let (lo, hi) = cloud.bounds().ok_or(Error::EmptyCloud)?;
    let margin = (hi - lo) * 0.1;
    let (lo, hi) = (lo - margin, hi + margin);
    let mut rng = seed::rng(seed);
    let mut points = cloud.points().to_vec();
    points.extend((0..level).map(|_| {
        Vec3::from(std::array::from_fn::<f64, 3, _>(|a| lo[a] + rng.random::<f64>() * (hi[a] - lo[a])))
    }));
    PointCloud::new(points, cloud.frame())
}

/// A rendered stack of parallel slices with its poses.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthSweep {
    pub masks: Vec<Mask>,
    /// Pixel-to-probe transform: uniform scale by the pixel size.
    pub calibration: Pose,
    /// Translation-only probe poses, one per frame.
    pub poses: Vec<Pose>,
}

/// Slices the shape with `n_frames` planes of constant z, `slice_spacing`
/// apart and centred on the shape. A pixel is foreground when the shape's
/// SDF at its world point is `<= 0`. The seed shifts the in-plane lattice
/// by a sub-pixel offset.
pub fn synth_sweep(
    shape: &SynthShape,
    n_frames: usize,
    slice_spacing: f64,
    pixel_size: f64,
    seed: u64,
) -> Result<SynthSweep> {
    shape.validate()?;
    if n_frames < 2 {
        return Err(Error::invalid(format!("a sweep needs at least 2 frames, got {n_frames}")));
    }
    for (name, v) in [("slice spacing", slice_spacing), ("pixel size", pixel_size)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    let (lo, hi) = shape.bounds();
    let mut rng = seed::rng(seed);
    let jitter = [rng.random::<f64>() * pixel_size, rng.random::<f64>() * pixel_size];
    // One empty pixel of margin on every side.
    let x0 = lo.x - pixel_size - jitter[0];
    let y0 = lo.y - pixel_size - jitter[1];
    let width = ((hi.x + pixel_size - x0) / pixel_size).ceil() as usize + 1;
    let height = ((hi.y + pixel_size - y0) / pixel_size).ceil() as usize + 1;
    if width.saturating_mul(height) > 1 << 26 {
        return Err(Error::invalid(format!("pixel size {pixel_size} makes {width}x{height} frames")));
    }
    let zc = 0.5 * (lo.z + hi.z);
    let calibration = Pose::scaling(pixel_size);
    let mut masks = Vec::with_capacity(n_frames);
    let mut poses = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let z = zc + (i as f64 - (n_frames - 1) as f64 / 2.0) * slice_spacing;
        let pose = Pose::translation(Vec3::new(x0, y0, z));
        let mut mask = Mask::empty(width, height);
        for row in 0..height {
            for col in 0..width {
                let p = pixel_to_world(&Vec3::new(col as f64, row as f64, 0.0), &calibration, &pose)?;
                if shape.sdf(&p) <= 0.0 {
                    mask.set(col, row, 255);
                }
            }
        }
        masks.push(mask);
        poses.push(pose);
    }
    Ok(SynthSweep { masks, calibration, poses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::topology_report;
    use crate::geometry::build_cloud_from_sweep;

    #[test]
    fn sphere_clouds_respect_their_mode() {
        let s = SynthShape::sphere();
        let v = synth_cloud(&s, 2000, CloudMode::Volumetric, 1).unwrap();
        assert!(v.points().iter().all(|p| p.norm() <= 0.5));
        let surf = synth_cloud(&s, 2000, CloudMode::Surface, 1).unwrap();
        assert!(surf.points().iter().all(|p| (p.norm() - 0.5).abs() <= 1e-6));
    }

    #[test]
    fn surface_points_are_on_every_shape() {
        for s in [SynthShape::sphere(), SynthShape::torus(), SynthShape::two_spheres()] {
            let c = synth_cloud(&s, 1000, CloudMode::Surface, 2).unwrap();
            assert!(c.points().iter().all(|p| s.sdf(p).abs() <= 1e-6), "{s:?}");
        }
    }

    #[test]
    fn torus_acceptance_rate() {
        let s = SynthShape::torus();
        let (lo, hi) = s.bounds();
        let expected = s.volume() / (hi - lo).product();
        let mut rng = seed::rng(3);
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| {
                let p = Vec3::from(std::array::from_fn::<f64, 3, _>(|a| lo[a] + rng.random::<f64>() * (hi[a] - lo[a])));
                s.sdf(&p) <= 0.0
            })
            .count();
        let rate = hits as f64 / n as f64;
        assert!((rate / expected - 1.0).abs() < 0.05, "{rate} vs {expected}");
    }

    #[test]
    fn torus_surface_samples_are_area_uniform() {
        // Outer half (rho > ring) holds more area than the inner half.
        let s = SynthShape::torus();
        let c = synth_cloud(&s, 50_000, CloudMode::Surface, 4).unwrap();
        let outer = c.points().iter().filter(|p| p.x.hypot(p.y) > 0.5).count() as f64 / 50_000.0;
        let expected = 0.5 + 0.15 / (PI * 0.5);
        assert!((outer - expected).abs() < 0.01, "{outer} vs {expected}");
    }

    #[test]
    fn eikonal_spot_check() {
        let h = 1e-6;
        let mut rng = seed::rng(9);
        for s in [SynthShape::sphere(), SynthShape::torus(), SynthShape::two_spheres()] {
            for _ in 0..200 {
                let p = Vec3::from(std::array::from_fn::<f64, 3, _>(|_| rng.random::<f64>() * 2.0 - 1.0));
                let g = Vec3::from(std::array::from_fn::<f64, 3, _>(|a| {
                    let mut e = Vec3::zeros();
                    e[a] = h;
                    (s.sdf(&(p + e)) - s.sdf(&(p - e))) / (2.0 * h)
                }));
                assert!((g.norm() - 1.0).abs() < 1e-4, "{s:?} at {p:?}");
            }
        }
    }

    #[test]
    fn reference_meshes_have_the_right_topology() {
        for s in [SynthShape::sphere(), SynthShape::torus(), SynthShape::two_spheres()] {
            let t = topology_report(&s.reference_mesh());
            assert_eq!(t.connected_components, s.components());
            assert!(t.watertight);
            assert!(t.components.iter().all(|c| c.genus == crate::eval::Genus::Closed(s.genus())));
        }
    }

    #[test]
    fn outliers_stay_in_the_inflated_box() {
        let c = synth_cloud(&SynthShape::sphere(), 300, CloudMode::Volumetric, 5).unwrap();
        assert_eq!(inject_outliers(&c, 0, 1).unwrap(), c);
        let noisy = inject_outliers(&c, 200, 1).unwrap();
        assert_eq!(noisy.len(), 500);
        assert_eq!(&noisy.points()[..300], c.points());
        let (lo, hi) = c.bounds().unwrap();
        let m = (hi - lo) * 0.1;
        for p in &noisy.points()[300..] {
            assert!((0..3).all(|a| p[a] >= lo[a] - m[a] && p[a] <= hi[a] + m[a]));
        }
    }

    #[test]
    fn sweep_equator_frame_is_largest() {
        let sw = synth_sweep(&SynthShape::sphere(), 11, 0.09, 0.02, 0).unwrap();
        let counts: Vec<usize> = sw.masks.iter().map(Mask::foreground_count).collect();
        let best = counts.iter().enumerate().max_by_key(|(i, c)| (**c, std::cmp::Reverse(*i))).unwrap().0;
        assert_eq!(best, 5, "{counts:?}");
    }

    #[test]
    fn slice_outside_is_empty() {
        // Spacing wide enough that the outer frames miss the sphere.
        let sw = synth_sweep(&SynthShape::sphere(), 3, 0.6, 0.05, 0).unwrap();
        assert_eq!(sw.masks[0].foreground_count(), 0);
        assert_eq!(sw.masks[2].foreground_count(), 0);
        assert!(sw.masks[1].foreground_count() > 0);
    }

    #[test]
    fn sweep_round_trip_matches_lattice_oracle() {
        for s in [SynthShape::sphere(), SynthShape::torus()] {
            let sw = synth_sweep(&s, 9, 0.04, 0.03, 17).unwrap();
            let cloud = build_cloud_from_sweep(&sw.masks, &sw.calibration, &sw.poses).unwrap();
            let mut oracle = Vec::new();
            for (mask, pose) in sw.masks.iter().zip(&sw.poses) {
                let t = pose.matrix();
                for row in 0..mask.height {
                    for col in 0..mask.width {
                        let p = Vec3::new(col as f64 * 0.03 + t[(0, 3)], row as f64 * 0.03 + t[(1, 3)], t[(2, 3)]);
                        if s.sdf(&p) <= 0.0 {
                            oracle.push(p);
                        }
                    }
                }
            }
            assert_eq!(cloud.points(), &oracle[..]);
        }
    }

    #[test]
    fn sweep_rejects_single_frame() {
        assert!(synth_sweep(&SynthShape::sphere(), 1, 0.1, 0.1, 0).is_err());
    }

    #[test]
    fn named_shapes() {
        assert_eq!(SynthShape::named("torus").unwrap(), SynthShape::torus());
        assert!(SynthShape::named("cube").is_err());
        let json = serde_json::to_string(&SynthShape::sphere()).unwrap();
        assert!(json.contains(r#""kind":"sphere""#), "{json}");
    }
}
