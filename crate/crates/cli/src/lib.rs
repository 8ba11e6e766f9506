//! The `usrecon` command line.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure, 4 internal
//! invariant violation. Errors are printed as `error [stage]: message`.

pub mod ablation;
mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use usrecon_core::pipeline::StageError;
use usrecon_core::Error;

pub use commands::{execute, mesh_info, MeshInfo, MetricsDocument, PerturbSidecar};

#[derive(Debug, Parser)]
#[command(name = "usrecon", version, about = "Neural SDF surface reconstruction from volumetric point clouds")]
pub struct Cli {
    /// Log level: error, warn, info, debug, trace.
    #[arg(long, global = true, default_value = "warn", env = "USRECON_LOG")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every command that runs or scores a reconstruction.
/// Later sources win: defaults, `FUNSR_SEED`, `--config`, `--set`, then the
/// dedicated flags.
#[derive(Debug, Clone, Default, Args)]
pub struct SettingsArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Require bit-reproducible output.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on a point cloud or tracked sweep and extract a mesh.
    Reconstruct(ReconstructArgs),
    /// Compare a predicted mesh against a reference mesh.
    Metrics(MetricsArgs),
    /// Print counts, topology and watertightness of a mesh.
    MeshInfo(MeshInfoArgs),
    /// Generate a synthetic fixture: cloud, sweep or reference mesh.
    Synth(SynthArgs),
    /// Perturb a poses CSV with seeded SE(3) noise.
    Perturb(PerturbArgs),
    /// Run the four loss variants on a synthetic fixture.
    Ablate(AblateArgs),
    /// Lift a tracked sweep to a world-space point cloud.
    SweepToCloud(SweepToCloudArgs),
    /// Print every config key with its default value.
    Defaults,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Point cloud (.xyz, .txt or .ply).
    #[arg(long, conflicts_with_all = ["masks", "manifest"])]
    pub cloud: Option<PathBuf>,
    /// Directory of frame_NNNNNN.pgm masks; needs --poses and --calibration.
    #[arg(long, requires_all = ["poses", "calibration"], conflicts_with = "manifest")]
    pub masks: Option<PathBuf>,
    #[arg(long)]
    pub poses: Option<PathBuf>,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Repeat a recorded run: inputs and settings come from the manifest.
    #[arg(long, conflicts_with_all = ["config", "set", "seed", "iterations", "resolution"])]
    pub manifest: Option<PathBuf>,
    /// Output mesh (.obj or .ply). Defaults to the manifest's mesh path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Loss history CSV; defaults to `<out stem>.loss.csv`.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    /// Run manifest; defaults to `<out stem>.manifest.json`.
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
    /// Write a network checkpoint every `checkpoint_interval` steps.
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    /// Write the training queries to `<prefix>.xyz` and their target cloud
    /// indices to `<prefix>.targets.csv`.
    #[arg(long, value_name = "PREFIX")]
    pub dump_queries: Option<PathBuf>,
    /// Write meshes as ASCII PLY instead of binary.
    #[arg(long)]
    pub ascii: bool,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Predicted mesh.
    pub predicted: PathBuf,
    /// Reference mesh.
    pub reference: PathBuf,
    /// JSON output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report squared-distance Chamfer instead of mean distance.
    #[arg(long)]
    pub squared_cd: bool,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct MeshInfoArgs {
    pub mesh: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Volumetric,
    Surface,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// sphere, torus or two-spheres.
    #[arg(long, default_value = "sphere")]
    pub shape: String,
    #[arg(long, value_enum, default_value = "volumetric")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 5000)]
    pub points: usize,
    /// Uniform outlier points added to the cloud.
    #[arg(long, default_value_t = 0)]
    pub outliers: usize,
    #[arg(long, default_value_t = 0, env = "FUNSR_SEED")]
    pub seed: u64,
    /// Point cloud output (.xyz or .ply).
    #[arg(long)]
    pub cloud: Option<PathBuf>,
    /// Sweep output directory: masks/, poses.csv and calibration.txt.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    pub frames: usize,
    #[arg(long, default_value_t = 0.025)]
    pub slice_spacing: f64,
    #[arg(long, default_value_t = 0.01)]
    pub pixel_size: f64,
    /// Analytic reference mesh output (.obj or .ply).
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long)]
    pub poses: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Rotation noise standard deviation, radians per axis.
    #[arg(long)]
    pub sigma_r: f64,
    /// Translation noise standard deviation, world units per axis.
    #[arg(long)]
    pub sigma_t: f64,
    #[arg(long, default_value_t = 0, env = "FUNSR_SEED")]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Synthetic fixture: sphere, torus or two-spheres.
    #[arg(long, default_value = "sphere")]
    pub fixture: String,
    /// Fixture cloud size.
    #[arg(long, default_value_t = 5000)]
    pub points: usize,
    /// Comma-separated seeds; every variant runs on each.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub seeds: Vec<u64>,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct SweepToCloudArgs {
    #[arg(long)]
    pub masks: PathBuf,
    #[arg(long)]
    pub poses: PathBuf,
    #[arg(long)]
    pub calibration: PathBuf,
    /// Point cloud output (.xyz or .ply).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_)
        | Error::EmptyCloud
        | Error::DegenerateCloud(_)
        | Error::NotWatertight(_)
        | Error::Parse { .. }
        | Error::Io(_) => 2,
        Error::NonFinite(_) => 3,
        Error::Invariant(_) => 4,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let _ = env_logger::Builder::new().parse_filters(&cli.log).format_timestamp(None).try_init();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(StageError { stage, source }) => {
            eprintln!("error [{stage}]: {source}");
            exit_code(&source)
        }
    }
}
