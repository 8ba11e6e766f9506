use serde::{Deserialize, Serialize};

use super::Real;
use crate::geometry::Vec3;

/// Sinusoidal input encoding
/// `[q, sin(2^0 pi q), cos(2^0 pi q), ..., sin(2^(L-1) pi q), cos(2^(L-1) pi q)]`,
/// each block holding the three axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionalEncoding {
    pub num_frequencies: usize,
    pub include_input: bool,
}

impl Default for PositionalEncoding {
    fn default() -> Self {
        Self {
            num_frequencies: 6,
            include_input: true,
        }
    }
}

impl PositionalEncoding {
    pub fn dim(&self) -> usize {
        3 * (usize::from(self.include_input) + 2 * self.num_frequencies)
    }

    pub fn encode(&self, q: &Vec3) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        let mut jac = Vec::new();
        self.encode_into(&[q.x, q.y, q.z], &mut out, &mut jac);
        out
    }

    /// Appends the encoding of `q` to `value` and, per encoded component, the
    /// derivative with respect to the axis that component depends on.
    pub(crate) fn encode_into<T: Real>(&self, q: &[T; 3], value: &mut Vec<T>, slope: &mut Vec<T>) {
        if self.include_input {
            value.extend_from_slice(q);
            slope.extend_from_slice(&[T::one(); 3]);
        }
        for k in 0..self.num_frequencies {
            let w = T::lit(std::f64::consts::PI * (1u64 << k) as f64);
            for &c in q {
                value.push((w * c).sin());
                slope.push(w * (w * c).cos());
            }
            for &c in q {
                value.push((w * c).cos());
                slope.push(-w * (w * c).sin());
            }
        }
    }

    /// Axis each encoded component depends on.
    pub(crate) fn axis_of(&self, component: usize) -> usize {
        component % 3
    }
}
