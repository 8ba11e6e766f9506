//! Pull projection, loss terms, Adam and the alternating training loop.

mod adam;
mod loss;

pub use adam::{AdamHyper, AdamState};
pub use loss::{
    adversarial_losses, geometric_terms, loss_scc, loss_self, project_query, GeometricTerms, GRADIENT_EPS,
    RESIDUAL_EPS,
};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Frame, PointCloud, SpatialIndex, Vec3};
use crate::nn::{
    Discriminator, DiscriminatorConfig, DiscriminatorInput, NetworkConfig, ParamGradients, Real, SdfNetwork,
};
use crate::sampling::{assign_targets, compute_local_sigma, generate_queries, QuerySet};
use crate::seed::{self, stream};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub lambda_self: f64,
    pub lambda_scc: f64,
    pub lambda_g: f64,
    pub seed: u64,
    pub deterministic: bool,
    /// Steps between sign censuses; 0 disables the census.
    pub census_interval: usize,
    /// Upper bound on the number of cloud points used as census probes.
    pub census_probes: usize,
    pub checkpoint_interval: usize,
    pub queries_per_point: usize,
    pub sigma_neighbors: usize,
    pub init_radius: f64,
    pub network: NetworkConfig,
    pub discriminator: DiscriminatorConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 15_000,
            batch_size: 5000,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            lambda_self: 1.0,
            lambda_scc: 0.005,
            lambda_g: 0.005,
            seed: 0,
            deterministic: true,
            census_interval: 10,
            census_probes: 2000,
            checkpoint_interval: 1000,
            queries_per_point: 25,
            sigma_neighbors: 50,
            init_radius: 0.5,
            network: NetworkConfig::default(),
            discriminator: DiscriminatorConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("adam_eps", self.adam_eps),
            ("init_radius", self.init_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        for (name, v) in [
            ("lambda_self", self.lambda_self),
            ("lambda_scc", self.lambda_scc),
            ("lambda_g", self.lambda_g),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if self.queries_per_point == 0 || self.sigma_neighbors == 0 {
            return Err(Error::invalid("queries_per_point and sigma_neighbors must be at least 1"));
        }
        if self.checkpoint_interval == 0 {
            return Err(Error::invalid("checkpoint_interval must be at least 1"));
        }
        if let DiscriminatorInput::BatchVector { batch_size } = self.discriminator.input {
            if batch_size != self.batch_size {
                return Err(Error::invalid(format!(
                    "batch-vector discriminator width {batch_size} differs from batch_size {}",
                    self.batch_size
                )));
            }
        }
        self.network.validate()
    }

    pub fn adam(&self) -> AdamHyper {
        AdamHyper {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

/// Losses of one iteration, measured before its updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub step: usize,
    pub loss_self: f64,
    pub loss_scc: f64,
    pub loss_g_adv: f64,
    pub loss_d: f64,
    pub total_g: f64,
    pub pos_count: Option<usize>,
    pub neg_count: Option<usize>,
}

impl LossReport {
    pub fn is_finite(&self) -> bool {
        [self.loss_self, self.loss_scc, self.loss_g_adv, self.loss_d, self.total_g]
            .iter()
            .all(|v| v.is_finite())
    }
}

fn non_finite(what: &str, step: usize) -> Error {
    Error::NonFinite(format!("{what} at step {step}"))
}

/// Weighted generator loss on one batch and its parameter gradients.
#[derive(Clone, Debug)]
pub struct GeneratorObjective<T> {
    pub loss_self: f64,
    pub loss_scc: f64,
    pub loss_g_adv: f64,
    pub total_g: f64,
    pub gradients: ParamGradients<T>,
    /// Predicted distances of the batch.
    pub values: Array1<T>,
}

pub fn generator_objective<T: Real>(
    net: &SdfNetwork<T>,
    disc: &Discriminator<T>,
    queries: ArrayView2<T>,
    targets: ArrayView2<T>,
    cfg: &TrainConfig,
) -> Result<GeneratorObjective<T>> {
    let tape = net.forward_tape(queries);
    let mut terms = geometric_terms(&tape, queries, targets, cfg.lambda_self, cfg.lambda_scc);
    let fake = disc.forward_tape(tape.values.view())?;
    let (g_adv, fooled_bar) = loss::least_squares_bar(fake.output.view(), 1.0);
    if cfg.lambda_g != 0.0 {
        let scaled = fooled_bar.mapv(|v| v * T::lit(cfg.lambda_g));
        let (_, input_bar) = disc.backward(&fake, scaled.view());
        terms.value_bar += &input_bar;
    }
    let total_g = cfg.lambda_self * terms.loss_self + cfg.lambda_scc * terms.loss_scc + cfg.lambda_g * g_adv;
    let gradients = net.backward(&tape, terms.value_bar.view(), terms.gradient_bar.view());
    Ok(GeneratorObjective {
        loss_self: terms.loss_self,
        loss_scc: terms.loss_scc,
        loss_g_adv: g_adv,
        total_g,
        gradients,
        values: tape.values,
    })
}

/// One generator update on the weighted loss, then one discriminator update
/// on the least-squares discriminator loss. The discriminator sees the
/// distances from the same forward pass, detached from the generator.
#[allow(clippy::too_many_arguments)]
pub fn train_step<T: Real>(
    net: &mut SdfNetwork<T>,
    disc: &mut Discriminator<T>,
    queries: ArrayView2<T>,
    targets: ArrayView2<T>,
    cfg: &TrainConfig,
    generator_opt: &mut AdamState<T>,
    discriminator_opt: &mut AdamState<T>,
) -> Result<LossReport> {
    let step = generator_opt.step as usize;
    if queries.nrows() == 0 || queries.dim() != targets.dim() || queries.ncols() != 3 {
        return Err(Error::invalid(format!(
            "batch shapes {:?} and {:?} must be equal, non-empty, 3 columns",
            queries.dim(),
            targets.dim()
        )));
    }
    let hyper = cfg.adam();
    let objective = generator_objective(net, disc, queries, targets, cfg)?;
    let GeneratorObjective { loss_self, loss_scc, loss_g_adv: g_adv, total_g, gradients: grads, values } = objective;
    if !total_g.is_finite() {
        return Err(non_finite("generator loss", step));
    }
    if !grads.is_finite() {
        return Err(non_finite("generator gradient", step));
    }
    generator_opt.update(net.layers_mut(), &grads, &hyper);

    let fake = disc.forward_tape(values.view())?;
    let (d_fake, fake_bar) = loss::least_squares_bar(fake.output.view(), 0.0);
    let zeros = Array1::<T>::zeros(values.len());
    let real = disc.forward_tape(zeros.view())?;
    let (d_real, real_bar) = loss::least_squares_bar(real.output.view(), 1.0);
    let (mut d_grads, _) = disc.backward(&fake, fake_bar.view());
    let (real_grads, _) = disc.backward(&real, real_bar.view());
    d_grads.scaled_add(T::one(), &real_grads);
    let loss_d = d_fake + d_real;
    if !loss_d.is_finite() || !d_grads.is_finite() {
        return Err(non_finite("discriminator loss", step));
    }
    discriminator_opt.update(disc.layers_mut(), &d_grads, &hyper);

    if !net.is_finite() {
        return Err(non_finite("generator parameters", step));
    }
    Ok(LossReport {
        step,
        loss_self,
        loss_scc,
        loss_g_adv: g_adv,
        loss_d,
        total_g,
        pos_count: None,
        neg_count: None,
    })
}

/// Counts probes with positive (or zero) and negative predicted distance.
pub fn sign_census<T: Real>(net: &SdfNetwork<T>, probes: &[Vec3]) -> Result<(usize, usize)> {
    let values = net.forward_batch(probes)?;
    let neg = values.iter().filter(|&&v| v < 0.0).count();
    Ok((values.len() - neg, neg))
}

/// Mean and population standard deviation of the negative-sign census over
/// the last `window` steps of a run. `None` when no census fell in the window.
pub fn census_spread(history: &[LossReport], window: usize) -> Option<(f64, f64)> {
    let last = history.last()?.step;
    let from = (last + 1).saturating_sub(window);
    let negs: Vec<f64> = history
        .iter()
        .filter(|r| r.step >= from)
        .filter_map(|r| r.neg_count)
        .map(|c| c as f64)
        .collect();
    if negs.is_empty() {
        return None;
    }
    let n = negs.len() as f64;
    let mean = negs.iter().sum::<f64>() / n;
    let var = negs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Hooks into [`fit_observed`].
pub trait TrainObserver<T: Real> {
    fn on_step(&mut self, _report: &LossReport) {}

    /// Called every `checkpoint_interval` completed steps and once at the
    /// end. A returned label names the checkpoint in later error messages.
    fn on_checkpoint(&mut self, _completed: usize, _net: &SdfNetwork<T>) -> Result<Option<String>> {
        Ok(None)
    }
}

impl<T: Real> TrainObserver<T> for () {}

#[derive(Clone, Debug)]
pub struct FitOutput<T: Real> {
    pub network: SdfNetwork<T>,
    pub discriminator: Discriminator<T>,
    pub history: Vec<LossReport>,
    pub queries: QuerySet,
    pub probes: Vec<Vec3>,
}

/// Everything drawn from the cloud before the first step.
#[derive(Clone, Debug)]
pub struct TrainingData<T> {
    pub queries: QuerySet,
    pub query_rows: Array2<T>,
    pub target_rows: Array2<T>,
    pub probes: Vec<Vec3>,
}

/// Local scales, queries, targets and census probes for `cloud`.
pub fn prepare_training_data<T: Real>(cloud: &PointCloud, cfg: &TrainConfig) -> Result<TrainingData<T>> {
    cloud.require_non_empty()?;
    if cloud.frame() != Frame::Normalized {
        return Err(Error::invalid("training expects a normalized cloud"));
    }
    let sigmas = compute_local_sigma(cloud, cfg.sigma_neighbors)?;
    let qs = generate_queries(cloud, &sigmas, cfg.queries_per_point, seed::derive(cfg.seed, stream::QUERIES))?;
    let index = SpatialIndex::new(cloud.points());
    let qs = assign_targets(&index, qs)?;
    let n = qs.len();
    let mut query_rows = Array2::zeros((n, 3));
    let mut target_rows = Array2::zeros((n, 3));
    for (i, (q, &t)) in qs.queries.iter().zip(&qs.target_index).enumerate() {
        let p = cloud.points()[t];
        for j in 0..3 {
            query_rows[[i, j]] = T::lit(q[j]);
            target_rows[[i, j]] = T::lit(p[j]);
        }
    }
    let mut rng = seed::rng_for(cfg.seed, stream::CENSUS_PROBES);
    let m = cfg.census_probes.min(cloud.len());
    let mut picked = rand::seq::index::sample(&mut rng, cloud.len(), m).into_vec();
    picked.sort_unstable();
    let probes = picked.iter().map(|&i| cloud.points()[i]).collect();
    Ok(TrainingData {
        queries: qs,
        query_rows,
        target_rows,
        probes,
    })
}

pub fn fit<T: Real>(cloud: &PointCloud, cfg: &TrainConfig) -> Result<FitOutput<T>> {
    fit_observed(cloud, cfg, &mut ())
}

/// Full training: sigmas, queries, targets, then the alternating loop.
pub fn fit_observed<T: Real>(
    cloud: &PointCloud,
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver<T>,
) -> Result<FitOutput<T>> {
    cfg.validate()?;
    let data = prepare_training_data::<T>(cloud, cfg)?;
    let mut net = SdfNetwork::<T>::geometric_init(
        cfg.network.clone(),
        cfg.init_radius,
        seed::derive(cfg.seed, stream::GENERATOR_INIT),
    )?;
    let mut disc = Discriminator::<T>::new(cfg.discriminator, seed::derive(cfg.seed, stream::DISCRIMINATOR_INIT))?;
    let mut gen_opt = AdamState::new(net.layers());
    let mut disc_opt = AdamState::new(disc.layers());
    let mut batches = seed::rng_for(cfg.seed, stream::BATCHES);
    let n = data.queries.len();
    let mut history = Vec::with_capacity(cfg.iterations);
    let mut last_good = "none (initialization)".to_string();
    let mut idx = vec![0usize; cfg.batch_size];

    for it in 0..cfg.iterations {
        for slot in idx.iter_mut() {
            *slot = batches.random_range(0..n);
        }
        let q = data.query_rows.select(Axis(0), &idx);
        let t = data.target_rows.select(Axis(0), &idx);
        let mut report = train_step(&mut net, &mut disc, q.view(), t.view(), cfg, &mut gen_opt, &mut disc_opt)
            .map_err(|e| match e {
                Error::NonFinite(msg) => Error::NonFinite(format!("{msg}; last good checkpoint: {last_good}")),
                other => other,
            })?;
        let done = it + 1;
        if cfg.census_interval > 0 && (it % cfg.census_interval == 0 || done == cfg.iterations) {
            let (pos, neg) = sign_census(&net, &data.probes)?;
            report.pos_count = Some(pos);
            report.neg_count = Some(neg);
        }
        observer.on_step(&report);
        history.push(report);
        if done % cfg.checkpoint_interval == 0 && done != cfg.iterations {
            if let Some(label) = observer.on_checkpoint(done, &net)? {
                last_good = label;
            }
        }
    }
    observer.on_checkpoint(cfg.iterations, &net)?;
    Ok(FitOutput {
        network: net,
        discriminator: disc,
        history,
        queries: data.queries,
        probes: data.probes,
    })
}
