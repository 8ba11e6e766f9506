use nalgebra::Matrix3;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::geometry::Vec3;
use crate::nn::{DualValue, Real, Tape};

/// Floor on the gradient norm when normalizing it.
pub const GRADIENT_EPS: f64 = 1e-8;
/// Residuals shorter than this contribute nothing to the sign term.
pub const RESIDUAL_EPS: f64 = 1e-10;

fn unit_gradient(g: &Vec3) -> (Vec3, f64) {
    let n = g.norm().max(GRADIENT_EPS);
    (g / n, n)
}

/// Pulls `q` along the normalized gradient by the predicted distance.
pub fn project_query(q: Vec3, dual: DualValue) -> Vec3 {
    let (dir, _) = unit_gradient(&dual.input_gradient);
    q - dual.value * dir
}

/// Mean squared distance between projected queries and their targets.
pub fn loss_self(pairs: &[(Vec3, Vec3)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(|(p, t)| (p - t).norm_squared()).sum::<f64>() / pairs.len() as f64
}

/// Mean cosine distance between the SDF gradient and the unit residual
/// `(projected - target) / |projected - target|`.
pub fn loss_scc(items: &[(Vec3, Vec3, Vec3)]) -> f64 {
    if items.is_empty() {
        return 0.0;
    }
    let total: f64 = items
        .iter()
        .map(|(g, projected, target)| {
            let r = projected - target;
            let m = r.norm();
            if m < RESIDUAL_EPS {
                return 0.0;
            }
            let (dir, _) = unit_gradient(g);
            1.0 - (dir.dot(&r) / m).clamp(-1.0, 1.0)
        })
        .sum();
    total / items.len() as f64
}

/// Least-squares adversarial losses from discriminator confidences on the
/// predicted distances (`fake`) and on zeros (`real`).
///
/// Returns `(generator term, discriminator loss)`.
pub fn adversarial_losses(fake: &[f64], real: &[f64]) -> (f64, f64) {
    let mean = |xs: &[f64], f: &dyn Fn(f64) -> f64| {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().map(|&x| f(x)).sum::<f64>() / xs.len() as f64
        }
    };
    let g_adv = mean(fake, &|d| 0.5 * (d - 1.0) * (d - 1.0));
    let l_d = mean(fake, &|d| 0.5 * d * d) + mean(real, &|d| 0.5 * (d - 1.0) * (d - 1.0));
    (g_adv, l_d)
}

/// Pull and sign-consistency terms of one batch with their adjoints.
#[derive(Clone, Debug)]
pub struct GeometricTerms<T> {
    pub loss_self: f64,
    pub loss_scc: f64,
    /// d/d f(q) of `lambda_self * loss_self + lambda_scc * loss_scc`.
    pub value_bar: Array1<T>,
    /// d/d grad f(q) of the same, `batch x 3`.
    pub gradient_bar: Array2<T>,
}

/// Evaluates the pull loss and the sign-consistency loss on a taped batch and
/// propagates them back to the network outputs and input gradients.
pub fn geometric_terms<T: Real>(
    tape: &Tape<T>,
    queries: ArrayView2<T>,
    targets: ArrayView2<T>,
    lambda_self: f64,
    lambda_scc: f64,
) -> GeometricTerms<T> {
    let b = tape.batch();
    let k = b as f64;
    let mut value_bar = Array1::zeros(b);
    let mut gradient_bar = Array2::zeros((b, 3));
    let (mut sum_self, mut sum_scc) = (0.0, 0.0);
    let row = |a: &ArrayView2<T>, i: usize| Vec3::new(a[[i, 0]].as_f64(), a[[i, 1]].as_f64(), a[[i, 2]].as_f64());
    let grads = tape.gradients.view();
    for i in 0..b {
        let s = tape.values[i].as_f64();
        let g = row(&grads, i);
        let q = row(&queries, i);
        let t = row(&targets, i);
        let n = g.norm();
        let (dir, n_eff) = unit_gradient(&g);
        // Jacobian of the normalized gradient.
        let jac = if n >= GRADIENT_EPS {
            (Matrix3::identity() - dir * dir.transpose()) / n_eff
        } else {
            Matrix3::identity() / n_eff
        };
        let r = q - s * dir - t;
        let m = r.norm();
        sum_self += m * m;

        let mut fbar = -2.0 * lambda_self / k * r.dot(&dir);
        let mut dir_bar = -2.0 * lambda_self * s / k * r;

        if m >= RESIDUAL_EPS {
            let rhat = r / m;
            let cos = dir.dot(&rhat);
            sum_scc += 1.0 - cos.clamp(-1.0, 1.0);
            if lambda_scc != 0.0 {
                let q_mat = (Matrix3::identity() - rhat * rhat.transpose()) / m;
                let q_dir = q_mat * dir;
                // d cos / d dir, including the path through the residual.
                let dcos_ddir = rhat - s * q_dir;
                fbar += lambda_scc / k * dir.dot(&q_dir);
                dir_bar -= lambda_scc / k * dcos_ddir;
            }
        }

        let gbar = jac.transpose() * dir_bar;
        value_bar[i] = T::lit(fbar);
        for j in 0..3 {
            gradient_bar[[i, j]] = T::lit(gbar[j]);
        }
    }
    GeometricTerms {
        loss_self: sum_self / k,
        loss_scc: sum_scc / k,
        value_bar,
        gradient_bar,
    }
}

/// Adjoints of `mean 1/2 (D - target)^2` with respect to each confidence.
pub(crate) fn least_squares_bar<T: Real>(confidences: ArrayView1<T>, target: f64) -> (f64, Array1<T>) {
    let k = confidences.len().max(1) as f64;
    let mut loss = 0.0;
    let bar = confidences.mapv(|d| {
        let e = d.as_f64() - target;
        loss += 0.5 * e * e;
        T::lit(e / k)
    });
    (loss / k, bar)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dual(value: f64, g: [f64; 3]) -> DualValue {
        DualValue { value, input_gradient: Vec3::new(g[0], g[1], g[2]) }
    }

    #[test]
    fn projection_examples() {
        let q = Vec3::new(0.3, -0.2, 0.9);
        assert_eq!(project_query(q, dual(0.0, [1.0, 2.0, 3.0])), q);
        assert_eq!(project_query(Vec3::new(0.0, 0.0, 2.0), dual(1.0, [0.0, 0.0, 1.0])), Vec3::new(0.0, 0.0, 1.0));
        let p = project_query(Vec3::new(0.0, 0.0, 0.5), dual(-0.5, [0.0, 0.0, 2.0]));
        assert_eq!(p, Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn projection_survives_zero_gradient() {
        let q = Vec3::new(0.1, 0.2, 0.3);
        let p = project_query(q, dual(0.5, [0.0, 0.0, 0.0]));
        assert_eq!(p, q);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn loss_self_examples() {
        let a = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(loss_self(&[(a, a), (a * 2.0, a * 2.0)]), 0.0);
        assert_eq!(loss_self(&[(Vec3::new(1.0, 0.0, 0.0), Vec3::zeros())]), 1.0);
        let pairs = [(Vec3::new(0.0, 1.0, 0.0), Vec3::zeros()), (Vec3::new(0.0, 0.0, 2.0), Vec3::zeros())];
        assert_eq!(loss_self(&pairs), 2.5);
    }

    #[test]
    fn loss_scc_examples() {
        let t = Vec3::zeros();
        let p = Vec3::new(0.0, 0.0, 0.3);
        assert!(loss_scc(&[(Vec3::new(0.0, 0.0, 5.0), p, t)]).abs() < 1e-15);
        assert!((loss_scc(&[(Vec3::new(0.0, 0.0, -0.1), p, t)]) - 2.0).abs() < 1e-15);
        assert!((loss_scc(&[(Vec3::new(2.0, 0.0, 0.0), p, t)]) - 1.0).abs() < 1e-15);
        // Coincident residual contributes zero but still counts in the mean.
        let both = [(Vec3::new(0.0, 0.0, -1.0), p, t), (Vec3::new(1.0, 0.0, 0.0), t, t)];
        assert!((loss_scc(&both) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn adversarial_examples() {
        assert_eq!(adversarial_losses(&[1.0, 1.0], &[0.3]).0, 0.0);
        assert_eq!(adversarial_losses(&[0.0, 0.0], &[1.0, 1.0]).1, 0.0);
        assert_eq!(adversarial_losses(&[0.5; 4], &[0.5; 4]), (0.125, 0.25));
    }
}
