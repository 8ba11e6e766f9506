//! Flat `key = value` run configuration.
//!
//! Precedence, lowest to highest: built-in defaults, `FUNSR_SEED` (seed
//! only), the config file, then command-line flags. Unknown keys are
//! rejected.

use std::collections::BTreeMap;
use std::path::Path;

use usrecon_core::eval::{MetricOptions, DEFAULT_SURFACE_SAMPLES};
use usrecon_core::nn::{DiscriminatorInput, PositionalEncoding};
use usrecon_core::pipeline::ReconstructConfig;
use usrecon_core::{Error, Result};

pub const SEED_ENV: &str = "FUNSR_SEED";

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "master seed for every random stream"),
    ("deterministic", "require bit-reproducible runs (true/false)"),
    ("iterations", "training iterations"),
    ("batch_size", "queries per training step"),
    ("learning_rate", "Adam step size for both networks"),
    ("adam_beta1", "Adam first-moment decay"),
    ("adam_beta2", "Adam second-moment decay"),
    ("adam_eps", "Adam denominator epsilon"),
    ("lambda_self", "weight of the self-supervised pull loss"),
    ("lambda_scc", "weight of the sign consistency loss"),
    ("lambda_g", "weight of the adversarial on-surface loss"),
    ("points", "farthest point sampling target N"),
    ("voxel_size", "voxel downsampling cell in world units, 0 disables"),
    ("queries_per_point", "Gaussian queries drawn per cloud point"),
    ("neighbors", "k of the k-th neighbour distance used as query sigma"),
    ("init_radius", "radius of the geometric initialization sphere"),
    ("hidden_layers", "hidden layers of the SDF network"),
    ("width", "hidden width of the SDF network"),
    ("skip_layer", "hidden layer receiving the input skip, or none"),
    ("softplus_beta", "softplus sharpness"),
    ("positional_encoding", "encode inputs with sin/cos features (on/off)"),
    ("pe_frequencies", "number of positional encoding octaves"),
    ("disc_hidden", "discriminator hidden width"),
    ("disc_leaky_slope", "discriminator leaky ReLU slope"),
    ("disc_input", "discriminator input: elementwise or batch"),
    ("census_interval", "steps between sign censuses, 0 disables"),
    ("census_probes", "cloud points used as census probes"),
    ("checkpoint_interval", "steps between checkpoints"),
    ("resolution", "marching cubes lattice resolution per axis"),
    ("bounds", "half-width of the extraction cube in normalized units"),
    ("surface_samples", "surface samples per mesh for distance metrics"),
    ("metric_voxel", "voxel size for DSC/IoU, or auto"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    /// Pipeline configuration. Encoding and discriminator input mode are
    /// filled in by [`Settings::reconstruct_config`].
    recon: ReconstructConfig,
    positional_encoding: bool,
    pe_frequencies: usize,
    disc_batch: bool,
    pub surface_samples: usize,
    pub metric_voxel: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        let recon = ReconstructConfig::default();
        Self {
            positional_encoding: recon.train.network.encoding.is_some(),
            pe_frequencies: recon.train.network.encoding.unwrap_or_default().num_frequencies,
            disc_batch: false,
            recon,
            surface_samples: DEFAULT_SURFACE_SAMPLES,
            metric_voxel: None,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn bad(key: &str, value: &str, expect: &str) -> Error {
    Error::InvalidInput(format!("{key}: expected {expect}, got {value:?}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str, expect: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value, expect))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "true/false")),
    }
}

impl Settings {
    /// Defaults with the `FUNSR_SEED` fallback applied.
    pub fn from_env() -> Result<Self> {
        let mut s = Self::default();
        if let Ok(v) = std::env::var(SEED_ENV) {
            s.set("seed", v.trim()).map_err(|e| Error::InvalidInput(format!("{SEED_ENV}: {e}")))?;
        }
        Ok(s)
    }

    pub fn reconstruct_config(&self) -> ReconstructConfig {
        let mut c = self.recon.clone();
        c.train.network.encoding = self.positional_encoding.then_some(PositionalEncoding {
            num_frequencies: self.pe_frequencies,
            include_input: true,
        });
        c.train.discriminator.input = if self.disc_batch {
            DiscriminatorInput::BatchVector { batch_size: c.train.batch_size }
        } else {
            DiscriminatorInput::Elementwise
        };
        c
    }

    pub fn seed(&self) -> u64 {
        self.recon.train.seed
    }

    pub fn validate(&self) -> Result<()> {
        if self.surface_samples == 0 {
            return Err(invalid("surface_samples must be at least 1"));
        }
        if let Some(v) = self.metric_voxel {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("metric_voxel must be positive, got {v}")));
            }
        }
        self.reconstruct_config().validate()
    }

    pub fn metric_options(&self) -> MetricOptions {
        MetricOptions {
            samples: self.surface_samples,
            seed: self.seed(),
            voxel_size: self.metric_voxel,
            squared_cd: false,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let t = &mut self.recon.train;
        let n = &mut t.network;
        let real = || num::<f64>(key, value, "a number");
        let count = || num::<usize>(key, value, "a non-negative integer");
        match key {
            "seed" => t.seed = num(key, value, "an unsigned 64-bit integer")?,
            "deterministic" => t.deterministic = flag(key, value)?,
            "iterations" => t.iterations = count()?,
            "batch_size" => t.batch_size = count()?,
            "learning_rate" => t.learning_rate = real()?,
            "adam_beta1" => t.adam_beta1 = real()?,
            "adam_beta2" => t.adam_beta2 = real()?,
            "adam_eps" => t.adam_eps = real()?,
            "lambda_self" => t.lambda_self = real()?,
            "lambda_scc" => t.lambda_scc = real()?,
            "lambda_g" => t.lambda_g = real()?,
            "points" => self.recon.max_points = count()?,
            "voxel_size" => self.recon.voxel_size = real()?,
            "queries_per_point" => t.queries_per_point = count()?,
            "neighbors" => t.sigma_neighbors = count()?,
            "init_radius" => t.init_radius = real()?,
            "hidden_layers" => n.hidden_layers = count()?,
            "width" => n.width = count()?,
            "skip_layer" => n.skip_layer = if value == "none" { None } else { Some(count()?) },
            "softplus_beta" => n.softplus_beta = real()?,
            "positional_encoding" => self.positional_encoding = flag(key, value)?,
            "pe_frequencies" => self.pe_frequencies = count()?,
            "disc_hidden" => t.discriminator.hidden = count()?,
            "disc_leaky_slope" => t.discriminator.leaky_slope = real()?,
            "disc_input" => {
                self.disc_batch = match value {
                    "elementwise" => false,
                    "batch" => true,
                    _ => return Err(bad(key, value, "elementwise or batch")),
                }
            }
            "census_interval" => t.census_interval = count()?,
            "census_probes" => t.census_probes = count()?,
            "checkpoint_interval" => t.checkpoint_interval = count()?,
            "resolution" => self.recon.resolution = count()?,
            "bounds" => self.recon.bounds = real()?,
            "surface_samples" => self.surface_samples = count()?,
            "metric_voxel" => self.metric_voxel = if value == "auto" { None } else { Some(real()?) },
            _ => return Err(invalid(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let t = &self.recon.train;
        let n = &t.network;
        Some(match key {
            "seed" => t.seed.to_string(),
            "deterministic" => t.deterministic.to_string(),
            "iterations" => t.iterations.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "adam_beta1" => t.adam_beta1.to_string(),
            "adam_beta2" => t.adam_beta2.to_string(),
            "adam_eps" => t.adam_eps.to_string(),
            "lambda_self" => t.lambda_self.to_string(),
            "lambda_scc" => t.lambda_scc.to_string(),
            "lambda_g" => t.lambda_g.to_string(),
            "points" => self.recon.max_points.to_string(),
            "voxel_size" => self.recon.voxel_size.to_string(),
            "queries_per_point" => t.queries_per_point.to_string(),
            "neighbors" => t.sigma_neighbors.to_string(),
            "init_radius" => t.init_radius.to_string(),
            "hidden_layers" => n.hidden_layers.to_string(),
            "width" => n.width.to_string(),
            "skip_layer" => n.skip_layer.map_or("none".into(), |s| s.to_string()),
            "softplus_beta" => n.softplus_beta.to_string(),
            "positional_encoding" => if self.positional_encoding { "on" } else { "off" }.into(),
            "pe_frequencies" => self.pe_frequencies.to_string(),
            "disc_hidden" => t.discriminator.hidden.to_string(),
            "disc_leaky_slope" => t.discriminator.leaky_slope.to_string(),
            "disc_input" => if self.disc_batch { "batch" } else { "elementwise" }.into(),
            "census_interval" => t.census_interval.to_string(),
            "census_probes" => t.census_probes.to_string(),
            "checkpoint_interval" => t.checkpoint_interval.to_string(),
            "resolution" => self.recon.resolution.to_string(),
            "bounds" => self.recon.bounds.to_string(),
            "surface_samples" => self.surface_samples.to_string(),
            "metric_voxel" => self.metric_voxel.map_or("auto".into(), |v| v.to_string()),
            _ => return None,
        })
    }

    /// Every key with its current value. Numbers use shortest round-trip
    /// formatting, so applying a snapshot reproduces the settings exactly.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        KEYS.iter()
            .map(|(k, _)| (k.to_string(), self.get(k).expect("every listed key has a getter")))
            .collect()
    }

    pub fn from_snapshot(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut s = Self::default();
        for (k, v) in map {
            s.set(k, v)?;
        }
        Ok(s)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            origin: path.display().to_string(),
            msg: e.to_string(),
        })?;
        for (line, key, value) in parse_config_text(&text, &path.display().to_string())? {
            self.set(&key, &value).map_err(|e| Error::Parse {
                origin: format!("{}:{line}", path.display()),
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// `key=value` overrides, as given to `--set`.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| invalid(format!("override {o:?} is not key=value")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }
}

/// `(line, key, value)` for each setting; `#` starts a comment. Repeated
/// keys are rejected.
pub fn parse_config_text(text: &str, origin: &str) -> Result<Vec<(usize, String, String)>> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            origin: format!("{origin}:{line_no}"),
            msg: format!("expected key = value, got {line:?}"),
        })?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if let Some(first) = seen.insert(k.clone(), line_no) {
            return Err(Error::Parse {
                origin: format!("{origin}:{line_no}"),
                msg: format!("key {k:?} already set on line {first}"),
            });
        }
        out.push((line_no, k, v));
    }
    Ok(out)
}

/// Config file text listing every key with its default.
pub fn documented_defaults() -> String {
    let s = Settings::default();
    let mut out = String::new();
    for (k, doc) in KEYS {
        out.push_str(&format!("# {doc}\n{k} = {}\n", s.get(k).unwrap()));
    }
    out
}
