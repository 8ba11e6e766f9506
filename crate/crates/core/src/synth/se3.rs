use nalgebra::{Matrix3, Matrix4};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, Vec3};
use crate::{seed, Error, Result};

/// Below this rotation angle the exponential uses truncated series.
const SMALL_ANGLE: f64 = 1e-6;

/// Isotropic Gaussian noise on the rotation and translation parts of an
/// se(3) element.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Se3Noise {
    pub sigma_r: f64,
    pub sigma_t: f64,
    pub seed: u64,
}

impl Se3Noise {
    pub fn validate(&self) -> Result<()> {
        for (name, s) in [("sigma_r", self.sigma_r), ("sigma_t", self.sigma_t)] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {s}")));
            }
        }
        Ok(())
    }
}

fn skew(w: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Exponential of the twist `(rotation, translation)`: Rodrigues for the
/// rotation block and the closed-form left Jacobian for the translation.
pub fn se3_exp(rotation: &Vec3, translation: &Vec3) -> Pose {
    let theta = rotation.norm();
    let w = skew(rotation);
    let w2 = w * w;
    let (a, b, c) = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0)
    } else {
        let (s, co) = theta.sin_cos();
        (s / theta, (1.0 - co) / (theta * theta), (theta - s) / (theta * theta * theta))
    };
    let r = Matrix3::identity() + w * a + w2 * b;
    let v = Matrix3::identity() + w * b + w2 * c;
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&(v * translation));
    Pose::new(m).expect("exponential is affine")
}

/// Left-multiplies every pose by the exponential of a fresh Gaussian twist.
/// Rotation components are drawn before translation components, pose by pose.
pub fn perturb_poses(poses: &[Pose], noise: &Se3Noise) -> Result<Vec<Pose>> {
    noise.validate()?;
    let mut rng = seed::rng(noise.seed);
    let mut draw = |sigma: f64| {
        let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        Vec3::from(v) * sigma
    };
    Ok(poses
        .iter()
        .map(|p| {
            let n_r = draw(noise.sigma_r);
            let n_t = draw(noise.sigma_t);
            se3_exp(&n_r, &n_t).compose(p)
        })
        .collect())
}

/// Rotation angle of a pose's upper-left block, in radians.
pub fn rotation_angle(pose: &Pose) -> f64 {
    let r = pose.matrix().fixed_view::<3, 3>(0, 0);
    ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};
    use proptest::prelude::*;

    fn rotation_block(p: &Pose) -> Matrix3<f64> {
        p.matrix().fixed_view::<3, 3>(0, 0).into_owned()
    }

    fn assert_rigid(p: &Pose) {
        let r = rotation_block(p);
        assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-9);
        assert!((r.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_noise_keeps_poses() {
        let poses = vec![Pose::translation(Vec3::new(1.0, 2.0, 3.0)), Pose::identity()];
        let out = perturb_poses(&poses, &Se3Noise { sigma_r: 0.0, sigma_t: 0.0, seed: 5 }).unwrap();
        assert_eq!(out, poses);
    }

    #[test]
    fn pure_rotation_about_x() {
        let theta = 0.7;
        let p = se3_exp(&Vec3::new(theta, 0.0, 0.0), &Vec3::zeros());
        let (s, c) = theta.sin_cos();
        let expect = Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c);
        assert!((rotation_block(&p) - expect).abs().max() < 1e-15);
        assert_eq!(p.matrix().fixed_view::<3, 1>(0, 3).into_owned(), Vec3::zeros());
    }

    #[test]
    fn matches_rotation_reference_and_screw_translation() {
        let w = Vec3::new(0.3, -0.4, 1.2);
        let t = Vec3::new(0.5, 0.1, -0.2);
        let p = se3_exp(&w, &t);
        let reference = Rotation3::from_scaled_axis(w);
        assert!((rotation_block(&p) - reference.matrix()).abs().max() < 1e-12);
        // Along the axis the translation passes through unchanged.
        let axis = Unit::new_normalize(w);
        let along = se3_exp(&w, &(axis.into_inner() * 0.8));
        let moved = along.matrix().fixed_view::<3, 1>(0, 3).into_owned();
        assert!((moved - axis.into_inner() * 0.8).norm() < 1e-12);
    }

    #[test]
    fn series_branch_is_continuous() {
        let t = Vec3::new(1.0, 2.0, 3.0);
        let small = se3_exp(&Vec3::new(0.0, 0.0, 0.9e-6), &t);
        let large = se3_exp(&Vec3::new(0.0, 0.0, 1.1e-6), &t);
        assert!((small.matrix() - large.matrix()).abs().max() < 1e-6);
    }

    #[test]
    fn max_rotation_at_moderate_noise() {
        let poses = vec![Pose::identity(); 10_000];
        let out = perturb_poses(&poses, &Se3Noise { sigma_r: 5e-2, sigma_t: 1e-1, seed: 1 }).unwrap();
        let max_deg = out.iter().map(rotation_angle).fold(0.0, f64::max).to_degrees();
        assert!((5.0..20.0).contains(&max_deg), "{max_deg}");
    }

    #[test]
    fn rejects_negative_sigma() {
        assert!(perturb_poses(&[], &Se3Noise { sigma_r: -1.0, sigma_t: 0.0, seed: 0 }).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 200, rng_seed: proptest::test_runner::RngSeed::Fixed(3), ..ProptestConfig::default() })]

        #[test]
        fn exponential_is_rigid(w in prop::array::uniform3(-4.0f64..4.0), t in prop::array::uniform3(-10.0f64..10.0)) {
            assert_rigid(&se3_exp(&Vec3::from(w), &Vec3::from(t)));
        }

        #[test]
        fn same_seed_same_output(seed in any::<u64>(), sr in 0.0f64..0.5, st in 0.0f64..2.0) {
            let poses = vec![Pose::translation(Vec3::new(0.0, 0.0, 4.0)); 8];
            let noise = Se3Noise { sigma_r: sr, sigma_t: st, seed };
            let a = perturb_poses(&poses, &noise).unwrap();
            prop_assert_eq!(&a, &perturb_poses(&poses, &noise).unwrap());
            for p in &a {
                assert_rigid(p);
            }
        }
    }
}
