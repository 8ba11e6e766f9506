use crate::nn::{Linear, ParamGradients, Real};

/// Adam moments for one parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    first: ParamGradients<T>,
    second: ParamGradients<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<T: Real> AdamState<T> {
    pub fn new(layers: &[Linear<T>]) -> Self {
        Self {
            step: 0,
            first: ParamGradients::zeros_like(layers),
            second: ParamGradients::zeros_like(layers),
        }
    }

    pub fn first_moment(&self) -> &ParamGradients<T> {
        &self.first
    }

    pub fn second_moment(&self) -> &ParamGradients<T> {
        &self.second
    }

    pub fn is_finite(&self) -> bool {
        self.first.is_finite() && self.second.is_finite()
    }

    /// One bias-corrected Adam update of `layers` along `grads`.
    pub fn update(&mut self, layers: &mut [Linear<T>], grads: &ParamGradients<T>, hyper: &AdamHyper) {
        debug_assert_eq!(layers.len(), grads.layers.len());
        self.step += 1;
        let t = self.step as i32;
        let b1 = T::lit(hyper.beta1);
        let b2 = T::lit(hyper.beta2);
        let one = T::one();
        let c1 = T::lit(1.0 - hyper.beta1.powi(t));
        let c2 = T::lit(1.0 - hyper.beta2.powi(t));
        let lr = T::lit(hyper.learning_rate);
        let eps = T::lit(hyper.eps);
        for (((layer, g), m), v) in layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.first.layers)
            .zip(&mut self.second.layers)
        {
            let params = layer.weight.iter_mut().chain(layer.bias.iter_mut());
            let gs = g.weight.iter().chain(g.bias.iter());
            let ms = m.weight.iter_mut().chain(m.bias.iter_mut());
            let vs = v.weight.iter_mut().chain(v.bias.iter_mut());
            for (((p, &gi), mi), vi) in params.zip(gs).zip(ms).zip(vs) {
                *mi = b1 * *mi + (one - b1) * gi;
                *vi = b2 * *vi + (one - b2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *p -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}
