//! Loss-term ablation on synthetic fixtures.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use usrecon_core::eval::{evaluate, topology_report, MetricOptions, MetricReport, TopologyReport};
use usrecon_core::pipeline::{reconstruct, ReconstructConfig, Stage, StageContext, StageError};
use usrecon_core::seed::{self, stream};
use usrecon_core::synth::{inject_outliers, synth_cloud, CloudMode, SynthShape};
use usrecon_core::train::census_spread;
use usrecon_core::{PointCloud, Result, TriangleMesh, Vec3};

/// Steps at the end of a run over which the sign census spread is taken.
pub const CENSUS_WINDOW: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Baseline,
    Scc,
    OscAdl,
    Full,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Baseline, Variant::Scc, Variant::OscAdl, Variant::Full];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Scc => "+scc",
            Variant::OscAdl => "+osc-adl",
            Variant::Full => "full",
        }
    }

    /// `base` with the loss weights this variant drops set to zero.
    pub fn config(self, base: &ReconstructConfig) -> ReconstructConfig {
        let mut c = base.clone();
        if matches!(self, Variant::Baseline | Variant::OscAdl) {
            c.train.lambda_scc = 0.0;
        }
        if matches!(self, Variant::Baseline | Variant::Scc) {
            c.train.lambda_g = 0.0;
        }
        c
    }
}

/// Volumetric fixture cloud with `outliers` uniform points added.
pub fn fixture_cloud(shape: &SynthShape, points: usize, outliers: usize, seed: u64) -> Result<PointCloud> {
    let cloud = synth_cloud(shape, points, CloudMode::Volumetric, seed)?;
    if outliers == 0 {
        return Ok(cloud);
    }
    inject_outliers(&cloud, outliers, seed::derive(seed, stream::OUTLIERS))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixtureRun {
    pub seed: u64,
    pub metrics: MetricReport,
    pub topology: TopologyReport,
    /// Mean and standard deviation of the trailing negative-sign census.
    pub census: Option<(f64, f64)>,
    pub seconds: f64,
    /// World units per normalized unit; multiply a distance by this to get
    /// it in the fixture frame.
    pub scale: f64,
    /// Reconstructed mesh in the fixture frame.
    #[serde(skip)]
    pub mesh: TriangleMesh,
}

/// Reconstructs `cloud` and scores it against the fixture's analytic mesh.
/// Fixture clouds are used as given: voxel downsampling is disabled.
/// Metrics are taken in the normalized training frame, so distances are in
/// normalized units whatever the fixture's size.
pub fn run_fixture(
    shape: &SynthShape,
    cloud: &PointCloud,
    cfg: &ReconstructConfig,
    metric: &MetricOptions,
) -> std::result::Result<FixtureRun, StageError> {
    let cfg = ReconstructConfig { voxel_size: 0.0, ..cfg.clone() };
    let t0 = std::time::Instant::now();
    let r = reconstruct(cloud, &cfg)?;
    let seconds = t0.elapsed().as_secs_f64();
    let to_normalized = |p: &Vec3| r.transform.apply(p);
    let pred = r.mesh.map_vertices(to_normalized);
    let reference = shape.reference_mesh().map_vertices(to_normalized);
    let metrics = evaluate(&pred, &reference, metric).stage(Stage::Evaluation)?;
    Ok(FixtureRun {
        seed: cfg.train.seed,
        metrics,
        topology: topology_report(&r.mesh),
        scale: r.transform.scale,
        mesh: r.mesh,
        census: census_spread(&r.fit.history, CENSUS_WINDOW),
        seconds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub lambda_scc: f64,
    pub lambda_g: f64,
    pub runs: usize,
    pub cd_mean: f64,
    pub hd_mean: f64,
    pub census_sd_mean: Option<f64>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

pub fn summarize(variant: Variant, cfg: &ReconstructConfig, runs: &[FixtureRun]) -> AblationRow {
    let sds: Option<Vec<f64>> = runs.iter().map(|r| r.census.map(|c| c.1)).collect();
    AblationRow {
        variant,
        lambda_scc: cfg.train.lambda_scc,
        lambda_g: cfg.train.lambda_g,
        runs: runs.len(),
        cd_mean: mean(runs.iter().map(|r| r.metrics.cd_mm)),
        hd_mean: mean(runs.iter().map(|r| r.metrics.hd_mm)),
        census_sd_mean: sds.filter(|v| !v.is_empty()).map(|v| mean(v.into_iter())),
    }
}

/// Every variant on every seed, one fixture cloud per seed.
pub fn ablate(
    shape: &SynthShape,
    points: usize,
    seeds: &[u64],
    base: &ReconstructConfig,
    metric: &MetricOptions,
) -> std::result::Result<Vec<AblationRow>, StageError> {
    let mut rows = Vec::new();
    for v in Variant::ALL {
        let mut runs = Vec::new();
        for &s in seeds {
            let cloud = fixture_cloud(shape, points, 0, s).stage(Stage::Io)?;
            let mut cfg = v.config(base);
            cfg.train.seed = s;
            let run = run_fixture(shape, &cloud, &cfg, &MetricOptions { seed: s, ..*metric })?;
            log::info!("{} seed {s}: cd {:.5} hd {:.5} in {:.0}s", v.name(), run.metrics.cd_mm, run.metrics.hd_mm, run.seconds);
            runs.push(run);
        }
        rows.push(summarize(v, &v.config(base), &runs));
    }
    Ok(rows)
}

pub const TABLE_HEADER: &str = "variant,lambda_scc,lambda_g,runs,cd_mean,hd_mean,census_sd_mean";

pub fn format_table(rows: &[AblationRow]) -> String {
    let mut out = format!("{TABLE_HEADER}\n");
    for r in rows {
        let sd = r.census_sd_mean.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.variant.name(),
            r.lambda_scc,
            r.lambda_g,
            r.runs,
            r.cd_mean,
            r.hd_mean,
            sd
        );
    }
    out
}
