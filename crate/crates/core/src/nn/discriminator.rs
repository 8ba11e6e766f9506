use ndarray::{Array1, Array2, ArrayView1, Axis, Zip};
use serde::{Deserialize, Serialize};

use super::{check_shapes, sigmoid, Linear, ParamGradients, Real};
use crate::{seed, Error, Result};

/// How predicted signed distances are presented to the discriminator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DiscriminatorInput {
    /// Each SDF value is one sample with a scalar input.
    Elementwise,
    /// The whole batch is a single sample of dimension `batch_size`.
    BatchVector { batch_size: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    pub hidden: usize,
    pub leaky_slope: f64,
    pub input: DiscriminatorInput,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            leaky_slope: 0.2,
            input: DiscriminatorInput::Elementwise,
        }
    }
}

impl DiscriminatorConfig {
    fn input_dim(&self) -> usize {
        match self.input {
            DiscriminatorInput::Elementwise => 1,
            DiscriminatorInput::BatchVector { batch_size } => batch_size,
        }
    }

    fn layer_dims(&self) -> [(usize, usize); 4] {
        let h = self.hidden;
        [(self.input_dim(), h), (h, h), (h, h), (h, 1)]
    }
}

/// Four fully connected layers, leaky rectifiers between them and a sigmoid
/// on the output: maps SDF values to a confidence in `(0, 1)` that they
/// come from the zero field.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator<T: Real = f32> {
    config: DiscriminatorConfig,
    layers: Vec<Linear<T>>,
}

#[derive(Clone, Debug)]
pub struct DiscTape<T> {
    inputs: Vec<Array2<T>>,
    pre: Vec<Array2<T>>,
    /// Sigmoid confidences, one per sample row.
    pub output: Array1<T>,
}

impl<T: Real> Discriminator<T> {
    pub fn new(config: DiscriminatorConfig, seed: u64) -> Result<Self> {
        if config.hidden == 0 || config.input_dim() == 0 {
            return Err(Error::invalid("discriminator dimensions must be positive"));
        }
        let mut rng = seed::rng(seed);
        let layers = config
            .layer_dims()
            .iter()
            .map(|&(i, o)| Linear::uniform_default(i, o, &mut rng))
            .collect();
        Ok(Self { config, layers })
    }

    pub fn from_layers(config: DiscriminatorConfig, layers: Vec<Linear<T>>) -> Result<Self> {
        let expected: Vec<Linear<T>> = config
            .layer_dims()
            .iter()
            .map(|&(i, o)| Linear::zeros(i, o))
            .collect();
        check_shapes(&expected, &layers).map_err(|_| Error::invalid("discriminator layer shapes do not match config"))?;
        Ok(Self { config, layers })
    }

    pub fn config(&self) -> &DiscriminatorConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Linear<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Linear<T>] {
        &mut self.layers
    }

    fn arrange(&self, values: ArrayView1<T>) -> Result<Array2<T>> {
        match self.config.input {
            DiscriminatorInput::Elementwise => Ok(values.to_owned().insert_axis(Axis(1))),
            DiscriminatorInput::BatchVector { batch_size } => {
                if values.len() != batch_size {
                    return Err(Error::invalid(format!(
                        "batch-vector discriminator expects {batch_size} values, got {}",
                        values.len()
                    )));
                }
                Ok(values.to_owned().insert_axis(Axis(0)))
            }
        }
    }

    pub fn forward_tape(&self, values: ArrayView1<T>) -> Result<DiscTape<T>> {
        let slope = T::lit(self.config.leaky_slope);
        let mut u = self.arrange(values)?;
        let mut inputs = Vec::with_capacity(4);
        let mut pre = Vec::with_capacity(4);
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = u.dot(&layer.weight.t());
            z += &layer.bias;
            let next = if l == 3 {
                z.mapv(sigmoid)
            } else {
                z.mapv(|v| if v > T::zero() { v } else { slope * v })
            };
            inputs.push(u);
            pre.push(z);
            u = next;
        }
        Ok(DiscTape {
            inputs,
            pre,
            output: u.column(0).to_owned(),
        })
    }

    pub fn confidences(&self, values: ArrayView1<T>) -> Result<Array1<T>> {
        Ok(self.forward_tape(values)?.output)
    }

    /// Given adjoints of a loss with respect to each confidence, returns the
    /// parameter gradients and the adjoints with respect to the input values.
    pub fn backward(&self, tape: &DiscTape<T>, output_bar: ArrayView1<T>) -> (ParamGradients<T>, Array1<T>) {
        let slope = T::lit(self.config.leaky_slope);
        let mut grads = ParamGradients::zeros_like(&self.layers);
        let mut ubar: Array2<T> = output_bar.to_owned().insert_axis(Axis(1));
        for l in (0..4).rev() {
            let z = &tape.pre[l];
            let mut zbar = ubar;
            if l == 3 {
                Zip::from(&mut zbar).and(&tape.output.view().insert_axis(Axis(1))).for_each(|g, &y| {
                    *g = *g * y * (T::one() - y);
                });
            } else {
                Zip::from(&mut zbar).and(z).for_each(|g, &zv| {
                    if zv <= T::zero() {
                        *g = *g * slope;
                    }
                });
            }
            grads.layers[l].weight = zbar.t().dot(&tape.inputs[l]);
            grads.layers[l].bias = zbar.sum_axis(Axis(0));
            ubar = zbar.dot(&self.layers[l].weight);
        }
        let input_bar = match self.config.input {
            DiscriminatorInput::Elementwise => ubar.column(0).to_owned(),
            DiscriminatorInput::BatchVector { .. } => ubar.row(0).to_owned(),
        };
        (grads, input_bar)
    }

    /// Confidence for each SDF value (elementwise mode) or for the batch as a
    /// whole (batch-vector mode).
    pub fn discriminator_forward(&self, sdf_values: &[f64]) -> Result<Vec<f64>> {
        if let Some(v) = sdf_values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("discriminator input {v}")));
        }
        let values: Array1<T> = sdf_values.iter().map(|&v| T::lit(v)).collect();
        Ok(self.confidences(values.view())?.iter().map(|v| v.as_f64()).collect())
    }
}
