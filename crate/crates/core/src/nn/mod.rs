//! The SDF network, its discriminator, and hand-derived differentiation for
//! the fixed architecture and loss family used in training.

mod checkpoint;
mod discriminator;
mod encoding;
mod sdf;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointMeta};
pub use discriminator::{DiscTape, Discriminator, DiscriminatorConfig, DiscriminatorInput};
pub use encoding::PositionalEncoding;
pub use sdf::{DualValue, NetworkConfig, SdfNetwork, Tape, INIT_MAX_DRAWS, INIT_MIN_CORRELATION};

use std::fmt::{Debug, Display};

use ndarray::{Array1, Array2, LinalgScalar, ScalarOperand};
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Floating point type the networks run in: `f32` for training, `f64` for
/// gradient checks.
pub trait Real:
    Float
    + LinalgScalar
    + ScalarOperand
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    const BYTES: usize;

    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 converts to every Real")
    }

    fn as_f64(self) -> f64 {
        <f64 as num_traits::NumCast>::from(self).expect("Real converts to f64")
    }

    fn write_le(self, out: &mut Vec<u8>);

    fn read_le(bytes: &[u8]) -> Self;
}

impl Real for f32 {
    const BYTES: usize = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

impl Real for f64 {
    const BYTES: usize = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

/// Fully connected layer `y = W x + b` with `W` stored `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Real> Linear<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    /// PyTorch's default `nn.Linear` initialization: `U(-1/sqrt(in), 1/sqrt(in))`.
    pub fn uniform_default(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut draw = || T::lit(rng.random_range(-bound..bound));
        Self {
            weight: Array2::from_shape_simple_fn((outputs, inputs), &mut draw),
            bias: Array1::from_shape_simple_fn(outputs, &mut draw),
        }
    }

    pub(crate) fn normal_weights(
        inputs: usize,
        outputs: usize,
        mean: f64,
        std: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let normal = Normal::new(mean, std).expect("finite std");
        Self {
            weight: Array2::from_shape_simple_fn((outputs, inputs), || T::lit(normal.sample(rng))),
            bias: Array1::zeros(outputs),
        }
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.weight.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }

    /// Parameters in checkpoint order: weight row-major, then bias.
    pub(crate) fn params(&self) -> impl Iterator<Item = &T> {
        self.weight.iter().chain(self.bias.iter())
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weight.iter_mut().chain(self.bias.iter_mut())
    }
}

/// Gradient accumulators with the same layer shapes as the network they
/// belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGradients<T> {
    pub layers: Vec<Linear<T>>,
}

impl<T: Real> ParamGradients<T> {
    pub fn zeros_like(layers: &[Linear<T>]) -> Self {
        Self {
            layers: layers
                .iter()
                .map(|l| Linear::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    pub fn flatten(&self) -> Vec<T> {
        self.layers.iter().flat_map(|l| l.params().copied()).collect()
    }

    pub fn zero(&mut self) {
        for l in &mut self.layers {
            l.weight.fill(T::zero());
            l.bias.fill(T::zero());
        }
    }

    pub fn scaled_add(&mut self, alpha: T, other: &ParamGradients<T>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.scaled_add(alpha, &b.weight);
            a.bias.scaled_add(alpha, &b.bias);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Linear::is_finite)
    }
}

pub(crate) fn check_shapes<T: Real>(layers: &[Linear<T>], grads: &[Linear<T>]) -> Result<()> {
    let same = layers.len() == grads.len()
        && layers
            .iter()
            .zip(grads)
            .all(|(a, b)| a.weight.dim() == b.weight.dim() && a.bias.dim() == b.bias.dim());
    if same {
        Ok(())
    } else {
        Err(Error::Invariant("gradient shapes do not match parameters".into()))
    }
}

#[inline]
pub(crate) fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
