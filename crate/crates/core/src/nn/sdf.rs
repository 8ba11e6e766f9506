use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, Linear, ParamGradients, PositionalEncoding, Real};
use crate::geometry::Vec3;
use crate::{seed, Error, Result};

/// Correlation with the sphere distance a geometric init must reach.
pub const INIT_MIN_CORRELATION: f64 = 0.9;
/// Draws tried by [`SdfNetwork::geometric_init`] before keeping the best.
pub const INIT_MAX_DRAWS: usize = 16;
const INIT_PROBES: usize = 2048;
const INIT_PROBE_SEED: u64 = 0x1417;

fn init_probes() -> Vec<Vec3> {
    let mut rng = seed::rng(INIT_PROBE_SEED);
    (0..INIT_PROBES)
        .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

/// Shape of the generator MLP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub hidden_layers: usize,
    pub width: usize,
    /// Hidden layer whose input is re-concatenated with the encoded input
    /// (both halves scaled by `1/sqrt(2)`).
    pub skip_layer: Option<usize>,
    pub softplus_beta: f64,
    pub encoding: Option<PositionalEncoding>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 8,
            width: 256,
            skip_layer: Some(4),
            softplus_beta: 100.0,
            encoding: None,
        }
    }
}

impl NetworkConfig {
    pub fn input_dim(&self) -> usize {
        self.encoding.map_or(3, |e| e.dim())
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.width == 0 {
            return Err(Error::invalid("network needs at least one hidden layer of width >= 1"));
        }
        if !(self.softplus_beta > 0.0) {
            return Err(Error::invalid("softplus beta must be positive"));
        }
        if self.input_dim() == 0 {
            return Err(Error::invalid("positional encoding produces no features"));
        }
        if let Some(s) = self.skip_layer {
            if s == 0 || s > self.hidden_layers {
                return Err(Error::invalid(format!(
                    "skip layer {s} must be in 1..={}",
                    self.hidden_layers
                )));
            }
            if self.width <= self.input_dim() {
                return Err(Error::invalid(format!(
                    "width {} must exceed the input dimension {} to host the skip connection",
                    self.width,
                    self.input_dim()
                )));
            }
        }
        Ok(())
    }

    /// `(inputs, outputs)` of layer `l`; layer `hidden_layers` is the output layer.
    pub fn layer_dims(&self, l: usize) -> (usize, usize) {
        let d = self.input_dim();
        let inputs = if l == 0 { d } else { self.width };
        let outputs = if l == self.hidden_layers {
            1
        } else if self.skip_layer == Some(l + 1) {
            self.width - d
        } else {
            self.width
        };
        (inputs, outputs)
    }

    pub fn param_count(&self) -> usize {
        (0..=self.hidden_layers)
            .map(|l| {
                let (i, o) = self.layer_dims(l);
                i * o + o
            })
            .sum()
    }
}

/// Signed distance and its exact gradient with respect to the input point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualValue {
    pub value: f64,
    pub input_gradient: Vec3,
}

impl DualValue {
    /// Gradients this small need the epsilon guard when normalized.
    pub fn is_degenerate(&self) -> bool {
        self.input_gradient.norm() < 1e-12
    }
}

/// Softplus `ln(1 + exp(beta z)) / beta` with its first two derivatives.
#[inline]
fn softplus<T: Real>(z: T, beta: T) -> (T, T, T) {
    let x = beta * z;
    let value = (x.max(T::zero()) + (-x.abs()).exp().ln_1p()) / beta;
    let d1 = sigmoid(x);
    let d2 = beta * d1 * (T::one() - d1);
    (value, d1, d2)
}

/// The generator MLP `f: R^3 -> R`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdfNetwork<T: Real = f32> {
    config: NetworkConfig,
    layers: Vec<Linear<T>>,
}

/// Intermediate values of a forward pass carrying the three input tangents,
/// kept for [`SdfNetwork::backward`].
///
/// Every stacked array holds `4 * batch` rows: the primal block followed by
/// the tangent blocks for d/dx, d/dy and d/dz.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    batch: usize,
    inputs: Vec<Array2<T>>,
    pre: Vec<Array2<T>>,
    slope: Vec<Array2<T>>,
    curvature: Vec<Array2<T>>,
    pub values: Array1<T>,
    /// `batch x 3` input gradients.
    pub gradients: Array2<T>,
}

impl<T> Tape<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

impl<T: Real> SdfNetwork<T> {
    pub fn new(config: NetworkConfig, layers: Vec<Linear<T>>) -> Result<Self> {
        config.validate()?;
        if layers.len() != config.hidden_layers + 1 {
            return Err(Error::invalid(format!(
                "expected {} layers, got {}",
                config.hidden_layers + 1,
                layers.len()
            )));
        }
        for (l, layer) in layers.iter().enumerate() {
            let (i, o) = config.layer_dims(l);
            if layer.weight.dim() != (o, i) || layer.bias.len() != o {
                return Err(Error::invalid(format!(
                    "layer {l} has shape {:?}, expected ({o}, {i})",
                    layer.weight.dim()
                )));
            }
        }
        Ok(Self { config, layers })
    }

    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let layers = (0..=config.hidden_layers)
            .map(|l| {
                let (i, o) = config.layer_dims(l);
                Linear::zeros(i, o)
            })
            .collect();
        Ok(Self { config, layers })
    }

    /// Initializes the network to approximate the SDF of a sphere of
    /// `radius` centred at the origin.
    ///
    /// A single draw of the scheme can come out visibly anisotropic at
    /// finite width. Draws are repeated on derived seeds until the output
    /// correlates with `|q| - radius` at [`INIT_MIN_CORRELATION`] over a
    /// fixed probe set in `[-1, 1]^3`; after [`INIT_MAX_DRAWS`] the best
    /// draw is kept.
    pub fn geometric_init(config: NetworkConfig, radius: f64, seed: u64) -> Result<Self> {
        config.validate()?;
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("init radius must be positive, got {radius}")));
        }
        let probes = init_probes();
        let target: Vec<f64> = probes.iter().map(|q| q.norm() - radius).collect();
        let mut best: Option<(f64, Self)> = None;
        for draw in 0..INIT_MAX_DRAWS {
            let draw_seed = if draw == 0 { seed } else { seed::derive(seed, draw as u64) };
            let net = Self::geometric_draw(config.clone(), radius, draw_seed);
            let r = pearson(&net.forward_batch(&probes)?, &target);
            if r >= INIT_MIN_CORRELATION {
                return Ok(net);
            }
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, net));
            }
        }
        let (r, net) = best.expect("at least one draw");
        log::debug!("geometric init kept best draw, correlation {r:.3}");
        Ok(net)
    }

    fn geometric_draw(config: NetworkConfig, radius: f64, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let h = config.hidden_layers;
        let d = config.input_dim();
        let raw_input = config.encoding.is_none_or(|e| e.include_input);
        let mut layers = Vec::with_capacity(h + 1);
        for l in 0..=h {
            let (i, o) = config.layer_dims(l);
            let layer = if l == h {
                let mean = std::f64::consts::PI.sqrt() / (i as f64).sqrt();
                let mut layer = Linear::normal_weights(i, o, mean, 1e-4, &mut rng);
                layer.bias.fill(T::lit(-radius));
                layer
            } else {
                let mut layer = Linear::normal_weights(i, o, 0.0, 2f64.sqrt() / (o as f64).sqrt(), &mut rng);
                if config.encoding.is_some() && raw_input {
                    // Start from the raw coordinates only; frequency features
                    // begin switched off.
                    if l == 0 {
                        layer.weight.slice_mut(s![.., 3..]).fill(T::zero());
                    }
                    if config.skip_layer == Some(l) {
                        layer.weight.slice_mut(s![.., i - (d - 3)..]).fill(T::zero());
                    }
                }
                layer
            };
            layers.push(layer);
        }
        Self { config, layers }
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Linear<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Linear<T>] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Linear::param_count).sum()
    }

    pub fn params(&self) -> Vec<T> {
        self.layers.iter().flat_map(|l| l.params().copied()).collect()
    }

    pub fn set_params(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                values.len()
            )));
        }
        for (dst, &v) in self.layers.iter_mut().flat_map(|l| l.params_mut()).zip(values) {
            *dst = v;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Linear::is_finite)
    }

    pub fn cast<U: Real>(&self) -> SdfNetwork<U> {
        SdfNetwork {
            config: self.config.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Linear {
                    weight: l.weight.mapv(|v| U::lit(v.as_f64())),
                    bias: l.bias.mapv(|v| U::lit(v.as_f64())),
                })
                .collect(),
        }
    }

    fn beta(&self) -> T {
        T::lit(self.config.softplus_beta)
    }

    fn skip_scale() -> T {
        T::lit(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// Encoded primal rows only (`batch x input_dim`).
    fn encode_rows(&self, q: ArrayView2<T>) -> Array2<T> {
        match self.config.encoding {
            None => q.to_owned(),
            Some(pe) => {
                let mut out = Array2::zeros((q.nrows(), pe.dim()));
                let (mut v, mut slope) = (Vec::new(), Vec::new());
                for (i, row) in q.rows().into_iter().enumerate() {
                    v.clear();
                    slope.clear();
                    pe.encode_into(&[row[0], row[1], row[2]], &mut v, &mut slope);
                    out.row_mut(i).assign(&ArrayView1::from(&v[..]));
                }
                out
            }
        }
    }

    /// Encoded input plus its tangent blocks (`4 batch x input_dim`).
    fn encode_stacked(&self, q: ArrayView2<T>) -> Array2<T> {
        let b = q.nrows();
        let d = self.config.input_dim();
        let mut out = Array2::zeros((4 * b, d));
        match self.config.encoding {
            None => {
                out.slice_mut(s![..b, ..]).assign(&q);
                for j in 0..3 {
                    out.slice_mut(s![(j + 1) * b..(j + 2) * b, j]).fill(T::one());
                }
            }
            Some(pe) => {
                let (mut v, mut slope) = (Vec::new(), Vec::new());
                for (i, row) in q.rows().into_iter().enumerate() {
                    v.clear();
                    slope.clear();
                    pe.encode_into(&[row[0], row[1], row[2]], &mut v, &mut slope);
                    for c in 0..d {
                        out[[i, c]] = v[c];
                        out[[(pe.axis_of(c) + 1) * b + i, c]] = slope[c];
                    }
                }
            }
        }
        out
    }

    /// Signed distances for a `batch x 3` block of points.
    pub fn forward_rows(&self, q: ArrayView2<T>) -> Array1<T> {
        let x0 = self.encode_rows(q);
        let beta = self.beta();
        let h = self.config.hidden_layers;
        let mut u = x0.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = u.dot(&layer.weight.t());
            z += &layer.bias;
            if l == h {
                return z.column(0).to_owned();
            }
            z.mapv_inplace(|v| softplus(v, beta).0);
            u = if self.config.skip_layer == Some(l + 1) {
                concatenate(Axis(1), &[z.view(), x0.view()]).expect("same row count") * Self::skip_scale()
            } else {
                z
            };
        }
        unreachable!("output layer returns")
    }

    /// Forward pass carrying d/dx, d/dy, d/dz tangents; records what
    /// [`backward`](Self::backward) needs.
    pub fn forward_tape(&self, q: ArrayView2<T>) -> Tape<T> {
        let b = q.nrows();
        let h = self.config.hidden_layers;
        let beta = self.beta();
        let x0 = self.encode_stacked(q);
        let mut tape = Tape {
            batch: b,
            inputs: Vec::with_capacity(h + 1),
            pre: Vec::with_capacity(h),
            slope: Vec::with_capacity(h),
            curvature: Vec::with_capacity(h),
            values: Array1::zeros(b),
            gradients: Array2::zeros((b, 3)),
        };
        let mut u = x0.clone();
        for l in 0..h {
            let layer = &self.layers[l];
            let out = layer.outputs();
            let mut z = u.dot(&layer.weight.t());
            {
                let mut primal = z.slice_mut(s![..b, ..]);
                primal += &layer.bias;
            }

            let mut act = Array2::zeros((4 * b, out));
            let mut d1 = Array2::zeros((b, out));
            let mut d2 = Array2::zeros((b, out));
            Zip::from(act.slice_mut(s![..b, ..]))
                .and(&mut d1)
                .and(&mut d2)
                .and(z.slice(s![..b, ..]))
                .for_each(|a, s1, s2, &zv| {
                    let (v, g1, g2) = softplus(zv, beta);
                    *a = v;
                    *s1 = g1;
                    *s2 = g2;
                });
            for j in 1..4 {
                Zip::from(act.slice_mut(s![j * b..(j + 1) * b, ..]))
                    .and(z.slice(s![j * b..(j + 1) * b, ..]))
                    .and(&d1)
                    .for_each(|a, &zt, &s1| *a = zt * s1);
            }
            let next = if self.config.skip_layer == Some(l + 1) {
                concatenate(Axis(1), &[act.view(), x0.view()]).expect("same row count") * Self::skip_scale()
            } else {
                act
            };
            tape.inputs.push(u);
            tape.pre.push(z);
            tape.slope.push(d1);
            tape.curvature.push(d2);
            u = next;
        }
        let last = &self.layers[h];
        let z = u.dot(&last.weight.t());
        let bias = last.bias[0];
        for i in 0..b {
            tape.values[i] = z[[i, 0]] + bias;
            for j in 0..3 {
                tape.gradients[[i, j]] = z[[(j + 1) * b + i, 0]];
            }
        }
        tape.inputs.push(u);
        tape
    }

    /// Parameter gradients of a scalar loss given its adjoints with respect
    /// to the outputs `f(q)` (`value_bar`) and input gradients `grad f(q)`
    /// (`gradient_bar`, `batch x 3`).
    pub fn backward(
        &self,
        tape: &Tape<T>,
        value_bar: ArrayView1<T>,
        gradient_bar: ArrayView2<T>,
    ) -> ParamGradients<T> {
        let b = tape.batch;
        let h = self.config.hidden_layers;
        let mut grads = ParamGradients::zeros_like(&self.layers);

        let mut zbar = Array2::zeros((4 * b, 1));
        zbar.slice_mut(s![..b, 0]).assign(&value_bar);
        for j in 0..3 {
            zbar.slice_mut(s![(j + 1) * b..(j + 2) * b, 0]).assign(&gradient_bar.column(j));
        }
        grads.layers[h].weight = zbar.t().dot(&tape.inputs[h]);
        grads.layers[h].bias[0] = value_bar.sum();
        let mut ubar = zbar.dot(&self.layers[h].weight);

        for l in (0..h).rev() {
            let layer = &self.layers[l];
            let out = layer.outputs();
            let abar = if self.config.skip_layer == Some(l + 1) {
                ubar.slice(s![.., ..out]).to_owned() * Self::skip_scale()
            } else {
                ubar
            };
            let pre = &tape.pre[l];
            let slope = &tape.slope[l];
            let curv = &tape.curvature[l];
            let mut zbar = Array2::zeros((4 * b, out));
            // Tangent rows: zdot_j = udot_j W^T, adot_j = s1 * zdot_j.
            for j in 1..4 {
                Zip::from(zbar.slice_mut(s![j * b..(j + 1) * b, ..]))
                    .and(abar.slice(s![j * b..(j + 1) * b, ..]))
                    .and(slope)
                    .for_each(|zb, &ab, &s1| *zb = ab * s1);
            }
            // Primal rows: a = s(z) plus the s''(z) path through the tangents.
            let mut second = Array2::<T>::zeros((b, out));
            for j in 1..4 {
                Zip::from(&mut second)
                    .and(abar.slice(s![j * b..(j + 1) * b, ..]))
                    .and(pre.slice(s![j * b..(j + 1) * b, ..]))
                    .for_each(|acc, &ab, &zt| *acc = *acc + ab * zt);
            }
            Zip::from(zbar.slice_mut(s![..b, ..]))
                .and(abar.slice(s![..b, ..]))
                .and(slope)
                .and(curv)
                .and(&second)
                .for_each(|zb, &ab, &s1, &s2, &sec| *zb = ab * s1 + s2 * sec);

            grads.layers[l].weight = zbar.t().dot(&tape.inputs[l]);
            grads.layers[l].bias = zbar.slice(s![..b, ..]).sum_axis(Axis(0));
            if l == 0 {
                break;
            }
            ubar = zbar.dot(&layer.weight);
        }
        grads
    }

    /// Signed distance per point.
    pub fn forward_batch(&self, qs: &[Vec3]) -> Result<Vec<f64>> {
        let rows = to_rows::<T>(qs)?;
        Ok(self.forward_rows(rows.view()).iter().map(|v| v.as_f64()).collect())
    }

    /// Signed distance and exact input gradient per point.
    pub fn forward_with_input_gradient(&self, qs: &[Vec3]) -> Result<Vec<DualValue>> {
        let rows = to_rows::<T>(qs)?;
        let tape = self.forward_tape(rows.view());
        Ok((0..qs.len())
            .map(|i| DualValue {
                value: tape.values[i].as_f64(),
                input_gradient: Vec3::new(
                    tape.gradients[[i, 0]].as_f64(),
                    tape.gradients[[i, 1]].as_f64(),
                    tape.gradients[[i, 2]].as_f64(),
                ),
            })
            .collect())
    }
}

pub(crate) fn to_rows<T: Real>(qs: &[Vec3]) -> Result<Array2<T>> {
    if let Some(i) = qs.iter().position(|q| !q.iter().all(|c| c.is_finite())) {
        return Err(Error::NonFinite(format!("query point {i} is not finite")));
    }
    Ok(Array2::from_shape_fn((qs.len(), 3), |(i, j)| T::lit(qs[i][j])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn tiny_config() -> NetworkConfig {
        NetworkConfig {
            hidden_layers: 2,
            width: 8,
            skip_layer: Some(1),
            softplus_beta: 100.0,
            encoding: None,
        }
    }

    fn random_points(n: usize, s: u64) -> Vec<Vec3> {
        let mut rng = seed::rng(s);
        (0..n)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    /// Symbolic single-point evaluation used as an oracle.
    fn naive_eval(net: &SdfNetwork<f64>, q: &Vec3) -> f64 {
        let cfg = net.config();
        let x0: Vec<f64> = match cfg.encoding {
            None => vec![q.x, q.y, q.z],
            Some(pe) => pe.encode(q),
        };
        let beta = cfg.softplus_beta;
        let mut u = x0.clone();
        for (l, layer) in net.layers().iter().enumerate() {
            let mut z: Vec<f64> = (0..layer.outputs())
                .map(|o| layer.bias[o] + (0..layer.inputs()).map(|i| layer.weight[[o, i]] * u[i]).sum::<f64>())
                .collect();
            if l == cfg.hidden_layers {
                return z[0];
            }
            for v in &mut z {
                *v = (1.0 + (beta * *v).exp()).ln() / beta;
            }
            if cfg.skip_layer == Some(l + 1) {
                z.extend_from_slice(&x0);
                z.iter_mut().for_each(|v| *v /= 2f64.sqrt());
            }
            u = z;
        }
        unreachable!()
    }

    #[test]
    fn dims_and_param_count() {
        let cfg = NetworkConfig::default();
        assert_eq!(cfg.layer_dims(0), (3, 256));
        assert_eq!(cfg.layer_dims(3), (256, 253));
        assert_eq!(cfg.layer_dims(4), (256, 256));
        assert_eq!(cfg.layer_dims(8), (256, 1));
        let net = SdfNetwork::<f32>::zeros(cfg.clone()).unwrap();
        assert_eq!(net.param_count(), cfg.param_count());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = tiny_config();
        cfg.skip_layer = Some(3);
        assert!(cfg.validate().is_err());
        cfg.skip_layer = Some(1);
        cfg.width = 3;
        assert!(cfg.validate().is_err());
        assert!(SdfNetwork::<f64>::geometric_init(tiny_config(), 0.0, 1).is_err());
    }

    #[test]
    fn one_hidden_unit_closed_form() {
        let cfg = NetworkConfig { hidden_layers: 1, width: 1, skip_layer: None, softplus_beta: 100.0, encoding: None };
        let mut l0 = Linear::<f64>::zeros(3, 1);
        l0.weight.assign(&ndarray::arr2(&[[0.5, -0.25, 2.0]]));
        l0.bias[0] = -0.1;
        let mut l1 = Linear::<f64>::zeros(1, 1);
        l1.weight[[0, 0]] = 3.0;
        l1.bias[0] = 0.2;
        let net = SdfNetwork::new(cfg, vec![l0, l1]).unwrap();
        let q = Vec3::new(0.3, 0.4, -0.01);
        let z: f64 = 0.5 * 0.3 - 0.25 * 0.4 + 2.0 * -0.01 - 0.1;
        let expected = 3.0 * (1.0 + (100.0 * z).exp()).ln() / 100.0 + 0.2;
        let got = net.forward_batch(&[q]).unwrap()[0];
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn matches_naive_evaluation() {
        for enc in [None, Some(PositionalEncoding { num_frequencies: 2, include_input: true })] {
            let cfg = NetworkConfig { encoding: enc, width: 24, hidden_layers: 3, skip_layer: Some(2), ..NetworkConfig::default() };
            let mut net = SdfNetwork::<f64>::geometric_init(cfg, 0.5, 3).unwrap();
            // Scramble so zeroed encoding weights are exercised too.
            let mut rng = seed::rng(4);
            let p: Vec<f64> = net.params().iter().map(|v| v + rng.random_range(-0.05..0.05)).collect();
            net.set_params(&p).unwrap();
            let pts = random_points(20, 5);
            let got = net.forward_batch(&pts).unwrap();
            for (q, g) in pts.iter().zip(got) {
                assert!((naive_eval(&net, q) - g).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn batch_equals_per_point_and_permutes() {
        let net = SdfNetwork::<f64>::geometric_init(NetworkConfig { width: 64, ..NetworkConfig::default() }, 0.5, 8).unwrap();
        let pts = random_points(37, 1);
        let batch = net.forward_batch(&pts).unwrap();
        for (q, b) in pts.iter().zip(&batch) {
            assert!((net.forward_batch(&[*q]).unwrap()[0] - b).abs() <= 1e-12);
        }
        let rev: Vec<Vec3> = pts.iter().rev().copied().collect();
        let out = net.forward_batch(&rev).unwrap();
        for (a, b) in out.iter().zip(batch.iter().rev()) {
            assert!((a - b).abs() <= 1e-12);
        }
        let split = [net.forward_batch(&pts[..10]).unwrap(), net.forward_batch(&pts[10..]).unwrap()].concat();
        for (a, b) in split.iter().zip(&batch) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn nan_rejected() {
        let net = SdfNetwork::<f64>::zeros(tiny_config()).unwrap();
        assert!(net.forward_batch(&[Vec3::new(f64::NAN, 0.0, 0.0)]).is_err());
        assert!(net.forward_with_input_gradient(&[Vec3::new(0.0, f64::INFINITY, 0.0)]).is_err());
    }

    #[test]
    fn linear_regime_gradient_is_exact() {
        // A large positive pre-activation keeps softplus on its identity branch.
        let cfg = NetworkConfig { hidden_layers: 1, width: 1, skip_layer: None, softplus_beta: 100.0, encoding: None };
        let mut l0 = Linear::<f64>::zeros(3, 1);
        l0.weight.assign(&ndarray::arr2(&[[0.7, -1.5, 0.25]]));
        l0.bias[0] = 50.0;
        let mut l1 = Linear::<f64>::zeros(1, 1);
        l1.weight[[0, 0]] = 1.0;
        l1.bias[0] = -50.0 + 0.3;
        let net = SdfNetwork::new(cfg, vec![l0, l1]).unwrap();
        for q in random_points(10, 2) {
            let d = net.forward_with_input_gradient(&[q]).unwrap()[0];
            assert_eq!(d.input_gradient, Vec3::new(0.7, -1.5, 0.25));
            assert!((d.value - (0.7 * q.x - 1.5 * q.y + 0.25 * q.z + 0.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        for enc in [None, Some(PositionalEncoding::default())] {
            let cfg = NetworkConfig { encoding: enc, width: 48, hidden_layers: 4, skip_layer: Some(2), ..NetworkConfig::default() };
            let net = SdfNetwork::<f64>::geometric_init(cfg, 0.5, 21).unwrap();
            let pts = random_points(50, 6);
            let duals = net.forward_with_input_gradient(&pts).unwrap();
            let h = 1e-4;
            for (q, d) in pts.iter().zip(duals) {
                let mut fd = Vec3::zeros();
                for j in 0..3 {
                    let mut e = Vec3::zeros();
                    e[j] = h;
                    let v = net.forward_batch(&[q + e, q - e]).unwrap();
                    fd[j] = (v[0] - v[1]) / (2.0 * h);
                }
                assert!((fd - d.input_gradient).norm() <= 1e-4 * d.input_gradient.norm().max(1e-8));
                assert!((d.value - naive_eval(&net, q)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn geometric_init_is_deterministic_and_sphere_like() {
        let a = SdfNetwork::<f32>::geometric_init(NetworkConfig::default(), 0.5, 99).unwrap();
        let b = SdfNetwork::<f32>::geometric_init(NetworkConfig::default(), 0.5, 99).unwrap();
        assert_eq!(a, b);
        let c = SdfNetwork::<f32>::geometric_init(NetworkConfig::default(), 0.5, 100).unwrap();
        assert_ne!(a, c);
        // Softplus flattens the field near the origin, so f(0) sits above -r
        // while the zero crossing stays near r.
        let f0 = a.forward_batch(&[Vec3::zeros()]).unwrap()[0];
        assert!((f0 + 0.5).abs() <= 0.35, "f(0) = {f0}");
        assert!(f0 < -0.15);
    }

    #[test]
    fn init_correlates_with_sphere_distance_on_fresh_samples() {
        let mut rng = seed::rng(4242);
        let qs: Vec<Vec3> = (0..4000)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let target: Vec<f64> = qs.iter().map(|q| q.norm() - 0.5).collect();
        for s in 0..4 {
            let net = SdfNetwork::<f64>::geometric_init(NetworkConfig::default(), 0.5, s).unwrap();
            let r = pearson(&net.forward_batch(&qs).unwrap(), &target);
            assert!(r >= 0.88, "seed {s}: r = {r}");
        }
    }

    #[test]
    fn init_zero_crossing_near_radius() {
        let mut rng = seed::rng(31);
        let net = SdfNetwork::<f64>::geometric_init(NetworkConfig::default(), 0.5, 4).unwrap();
        let mut radii = Vec::new();
        for _ in 0..50 {
            let d = Vec3::new(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal)).normalize();
            let (mut lo, mut hi) = (0.0, 1.5);
            assert!(net.forward_batch(&[d * hi]).unwrap()[0] > 0.0);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if net.forward_batch(&[d * mid]).unwrap()[0] < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            radii.push(lo);
        }
        let mean = radii.iter().sum::<f64>() / radii.len() as f64;
        assert!((mean - 0.5).abs() < 0.15, "mean crossing radius {mean}");
    }

    #[test]
    fn positive_on_unit_sphere_at_init() {
        let net = SdfNetwork::<f32>::geometric_init(NetworkConfig::default(), 0.5, 5).unwrap();
        let mut rng = seed::rng(12);
        let dirs: Vec<Vec3> = (0..1000)
            .map(|_| {
                let v = Vec3::new(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal));
                v.normalize()
            })
            .collect();
        let vals = net.forward_batch(&dirs).unwrap();
        let positive = vals.iter().filter(|&&v| v > 0.0).count();
        assert!(positive >= 950, "{positive} of 1000 positive");
    }

    #[test]
    fn init_gradient_points_outward_near_x_axis() {
        let mut total = 0.0;
        for s in 0..8 {
            let net = SdfNetwork::<f64>::geometric_init(NetworkConfig::default(), 0.5, s).unwrap();
            let d = net.forward_with_input_gradient(&[Vec3::new(0.9, 0.0, 0.0)]).unwrap()[0];
            total += d.input_gradient.normalize().x.clamp(-1.0, 1.0).acos().to_degrees();
        }
        assert!(total / 8.0 < 20.0, "mean angle {}", total / 8.0);
    }

    #[test]
    fn disabled_encoding_matches_plain_network() {
        let plain = NetworkConfig { width: 16, hidden_layers: 2, skip_layer: Some(1), ..NetworkConfig::default() };
        let net = SdfNetwork::<f64>::geometric_init(plain.clone(), 0.5, 3).unwrap();
        let same = SdfNetwork::new(NetworkConfig { encoding: None, ..plain }, net.layers().to_vec()).unwrap();
        let pts = random_points(5, 3);
        assert_eq!(net.forward_batch(&pts).unwrap(), same.forward_batch(&pts).unwrap());
    }
}
