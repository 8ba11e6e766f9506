use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use usrecon_core::eval::{evaluate, topology_report, Genus, MetricReport, TopologyReport};
use usrecon_core::geometry::build_cloud_from_sweep;
use usrecon_core::io::{self, PlyEncoding, SweepInput};
use usrecon_core::nn::save_checkpoint;
use usrecon_core::pipeline::{reconstruct_observed, Stage, StageContext, StageError};
use usrecon_core::seed::{self, stream};
use usrecon_core::synth::{inject_outliers, perturb_poses, synth_cloud, synth_sweep, CloudMode, Se3Noise, SynthShape};
use usrecon_core::train::TrainObserver;
use usrecon_core::{Error, PointCloud, Result, SdfNetwork, TriangleMesh};

use crate::ablation::{ablate, fixture_cloud, format_table};
use crate::config::{documented_defaults, invalid, Settings};
use crate::manifest::{digest, RunManifest};
use crate::{
    AblateArgs, Command, MeshInfoArgs, MetricsArgs, ModeArg, PerturbArgs, ReconstructArgs, SettingsArgs, SweepToCloudArgs,
    SynthArgs,
};

type StageResult<T = ()> = std::result::Result<T, StageError>;

pub fn execute(cmd: Command) -> StageResult {
    match cmd {
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::MeshInfo(a) => cmd_mesh_info(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::SweepToCloud(a) => cmd_sweep_to_cloud(a),
        Command::Defaults => {
            print!("{}", documented_defaults());
            Ok(())
        }
    }
}

fn load_settings(a: &SettingsArgs) -> Result<Settings> {
    let mut s = Settings::from_env()?;
    if let Some(p) = &a.config {
        s.apply_file(p)?;
    }
    s.apply_overrides(&a.set)?;
    if let Some(v) = a.seed {
        s.set("seed", &v.to_string())?;
    }
    if let Some(v) = a.iterations {
        s.set("iterations", &v.to_string())?;
    }
    if let Some(v) = a.resolution {
        s.set("resolution", &v.to_string())?;
    }
    if a.deterministic {
        s.set("deterministic", "true")?;
    }
    s.validate()?;
    Ok(s)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes).map_err(|e| Error::Parse {
        origin: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// Where a reconstruction reads its points from.
#[derive(Clone, Debug)]
enum Input {
    Cloud(PathBuf),
    Sweep { masks: PathBuf, poses: PathBuf, calibration: PathBuf },
}

impl Input {
    fn from_args(a: &ReconstructArgs) -> Result<Self> {
        match (&a.cloud, &a.masks, &a.poses, &a.calibration) {
            (Some(c), None, None, None) => Ok(Input::Cloud(c.clone())),
            (None, Some(m), Some(p), Some(c)) => Ok(Input::Sweep {
                masks: m.clone(),
                poses: p.clone(),
                calibration: c.clone(),
            }),
            (Some(_), ..) => Err(invalid("--cloud cannot be combined with sweep inputs")),
            _ => Err(invalid("give --cloud, or --masks with --poses and --calibration, or --manifest")),
        }
    }

    fn from_manifest(m: &RunManifest) -> Result<Self> {
        let path = |role: &str| m.input(role).map(|d| d.path.clone());
        match (path("cloud"), path("masks"), path("poses"), path("calibration")) {
            (Some(c), None, None, None) => Ok(Input::Cloud(c)),
            (None, Some(masks), Some(poses), Some(calibration)) => Ok(Input::Sweep { masks, poses, calibration }),
            _ => Err(invalid("manifest inputs must be a cloud, or masks with poses and calibration")),
        }
    }

    fn roles(&self) -> Vec<(&'static str, &Path)> {
        match self {
            Input::Cloud(c) => vec![("cloud", c)],
            Input::Sweep { masks, poses, calibration } => {
                vec![("masks", masks), ("poses", poses), ("calibration", calibration)]
            }
        }
    }

    fn load(&self) -> StageResult<PointCloud> {
        match self {
            Input::Cloud(c) => io::read_cloud(c).stage(Stage::Io),
            Input::Sweep { masks, poses, calibration } => {
                let sweep = io::read_sweep(masks, poses, calibration).stage(Stage::Io)?;
                build_cloud_from_sweep(&sweep.masks, &sweep.calibration, &sweep.poses).stage(Stage::Geometry)
            }
        }
    }
}

struct CheckpointWriter {
    dir: Option<PathBuf>,
    seed: u64,
}

impl TrainObserver<f32> for CheckpointWriter {
    fn on_checkpoint(&mut self, completed: usize, net: &SdfNetwork<f32>) -> Result<Option<String>> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let p = dir.join(format!("step_{completed:06}.ckpt"));
        save_checkpoint(&p, net, self.seed, completed)?;
        Ok(Some(p.display().to_string()))
    }
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

fn cmd_reconstruct(a: ReconstructArgs) -> StageResult {
    let (settings, input, recorded_out) = match &a.manifest {
        Some(mp) => {
            let m = RunManifest::read(mp).stage(Stage::Config)?;
            m.verify_inputs().stage(Stage::Io)?;
            let s = Settings::from_snapshot(&m.config).stage(Stage::Config)?;
            s.validate().stage(Stage::Config)?;
            let input = Input::from_manifest(&m).stage(Stage::Config)?;
            let out = m.outputs.iter().find(|d| d.role == "mesh").map(|d| d.path.clone());
            (s, input, out)
        }
        None => (
            load_settings(&a.settings).stage(Stage::Config)?,
            Input::from_args(&a).stage(Stage::Config)?,
            None,
        ),
    };
    let out = a
        .out
        .clone()
        .or(recorded_out)
        .ok_or_else(|| invalid("--out is required"))
        .stage(Stage::Config)?;
    // Reject an unknown extension before spending time on training.
    let ext = out.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    if ext != "obj" && ext != "ply" {
        return Err(invalid(format!("{}: mesh output must be .obj or .ply", out.display()))).stage(Stage::Config);
    }
    let loss_path = a.loss_csv.clone().unwrap_or_else(|| sibling(&out, "loss.csv"));
    let manifest_path = a.manifest_out.clone().unwrap_or_else(|| sibling(&out, "manifest.json"));

    let mut manifest = RunManifest::new("reconstruct", settings.snapshot(), settings.seed());
    for (role, p) in input.roles() {
        manifest.inputs.push(digest(role, p).stage(Stage::Io)?);
    }

    let t0 = Instant::now();
    let cloud = input.load()?;
    manifest.timings.insert("read".into(), t0.elapsed().as_secs_f64());

    if let Some(dir) = &a.checkpoint_dir {
        fs::create_dir_all(dir).map_err(Error::from).stage(Stage::Io)?;
    }
    let mut observer = CheckpointWriter { dir: a.checkpoint_dir.clone(), seed: settings.seed() };
    let cfg = settings.reconstruct_config();
    let r = reconstruct_observed(&cloud, &cfg, &mut observer)?;
    manifest.timings.insert("geometry".into(), r.timings.geometry);
    manifest.timings.insert("training".into(), r.timings.training);
    manifest.timings.insert("meshing".into(), r.timings.meshing);

    let t0 = Instant::now();
    let enc = if a.ascii { PlyEncoding::Ascii } else { PlyEncoding::BinaryLittleEndian };
    let bytes = io::mesh_bytes(&out, &r.mesh, enc).stage(Stage::Io)?;
    write_file(&out, &bytes).stage(Stage::Io)?;
    write_file(&loss_path, io::format_loss_csv(&r.fit.history).as_bytes()).stage(Stage::Io)?;
    if let Some(prefix) = &a.dump_queries {
        let q = &r.fit.queries;
        write_file(&sibling(prefix, "xyz"), io::format_xyz(&q.queries).as_bytes()).stage(Stage::Io)?;
        let mut csv = String::from("query,target\n");
        for (i, t) in q.target_index.iter().enumerate() {
            let _ = writeln!(csv, "{i},{t}");
        }
        write_file(&sibling(prefix, "targets.csv"), csv.as_bytes()).stage(Stage::Io)?;
    }
    manifest.outputs.push(digest("mesh", &out).stage(Stage::Io)?);
    manifest.outputs.push(digest("loss", &loss_path).stage(Stage::Io)?);
    manifest.timings.insert("write".into(), t0.elapsed().as_secs_f64());
    manifest.write(&manifest_path).stage(Stage::Io)?;

    let topo = topology_report(&r.mesh);
    log::info!(
        "{}: {} vertices, {} faces, {} components, watertight {}",
        out.display(),
        r.mesh.vertices.len(),
        r.mesh.faces.len(),
        topo.connected_components,
        topo.watertight
    );
    Ok(())
}

/// JSON document written by `metrics`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub predicted: PathBuf,
    pub reference: PathBuf,
    pub metrics: MetricReport,
    pub topology_predicted: TopologyReport,
    pub topology_reference: TopologyReport,
}

fn emit(out: Option<&Path>, text: &str) -> StageResult {
    match out {
        Some(p) => write_file(p, text.as_bytes()).stage(Stage::Io),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::Invariant(e.to_string()))
}

fn cmd_metrics(a: MetricsArgs) -> StageResult {
    let s = load_settings(&a.settings).stage(Stage::Config)?;
    let pred = io::read_mesh(&a.predicted).stage(Stage::Io)?;
    let reference = io::read_mesh(&a.reference).stage(Stage::Io)?;
    let mut opts = s.metric_options();
    opts.squared_cd = a.squared_cd;
    let metrics = evaluate(&pred, &reference, &opts).stage(Stage::Evaluation)?;
    let doc = MetricsDocument {
        predicted: a.predicted,
        reference: a.reference,
        metrics,
        topology_predicted: topology_report(&pred),
        topology_reference: topology_report(&reference),
    };
    emit(a.out.as_deref(), &json(&doc).stage(Stage::Evaluation)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshInfo {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub components: usize,
    pub euler_characteristic: i64,
    pub genus_per_component: Vec<Genus>,
    pub watertight: bool,
}

pub fn mesh_info(mesh: &TriangleMesh) -> MeshInfo {
    let t = topology_report(mesh);
    MeshInfo {
        vertices: mesh.vertices.len(),
        edges: mesh.edge_face_counts().len(),
        faces: mesh.faces.len(),
        components: t.connected_components,
        euler_characteristic: mesh.euler_characteristic(),
        genus_per_component: t.genus_per_component,
        watertight: t.watertight,
    }
}

fn cmd_mesh_info(a: MeshInfoArgs) -> StageResult {
    let mesh = io::read_mesh(&a.mesh).stage(Stage::Io)?;
    let info = mesh_info(&mesh);
    if a.json {
        return emit(None, &json(&info).stage(Stage::Evaluation)?);
    }
    let genus: Vec<String> = info
        .genus_per_component
        .iter()
        .map(|g| match g {
            Genus::Closed(g) => g.to_string(),
            Genus::NonManifold => "non-manifold".into(),
        })
        .collect();
    println!("vertices {}", info.vertices);
    println!("edges {}", info.edges);
    println!("faces {}", info.faces);
    println!("components {}", info.components);
    println!("euler_characteristic {}", info.euler_characteristic);
    println!("genus {}", genus.join(" "));
    println!("watertight {}", info.watertight);
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> StageResult {
    let shape = SynthShape::named(&a.shape).stage(Stage::Config)?;
    if a.cloud.is_none() && a.sweep.is_none() && a.reference.is_none() {
        return Err(invalid("nothing to write: give --cloud, --sweep or --reference")).stage(Stage::Config);
    }
    if let Some(p) = &a.cloud {
        let cloud = match a.mode {
            ModeArg::Volumetric => fixture_cloud(&shape, a.points, a.outliers, a.seed),
            ModeArg::Surface => synth_cloud(&shape, a.points, CloudMode::Surface, a.seed).and_then(|c| match a.outliers {
                0 => Ok(c),
                n => inject_outliers(&c, n, seed::derive(a.seed, stream::OUTLIERS)),
            }),
        }
        .stage(Stage::Geometry)?;
        io::write_cloud(p, &cloud).stage(Stage::Io)?;
    }
    if let Some(dir) = &a.sweep {
        let sw = synth_sweep(&shape, a.frames, a.slice_spacing, a.pixel_size, a.seed).stage(Stage::Geometry)?;
        let input = SweepInput { masks: sw.masks, calibration: sw.calibration, poses: sw.poses };
        io::write_sweep(dir, &input).stage(Stage::Io)?;
    }
    if let Some(p) = &a.reference {
        io::write_mesh(p, &shape.reference_mesh()).stage(Stage::Io)?;
    }
    Ok(())
}

/// Noise parameters written next to a perturbed poses file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbSidecar {
    pub source: PathBuf,
    pub source_sha256: String,
    pub noise: Se3Noise,
    /// The exponential of the noise twist multiplies each pose from the left.
    pub composition: String,
    pub translation_units: String,
}

fn cmd_perturb(a: PerturbArgs) -> StageResult {
    let noise = Se3Noise { sigma_r: a.sigma_r, sigma_t: a.sigma_t, seed: a.seed };
    noise.validate().stage(Stage::Config)?;
    let rows = io::read_poses(&a.poses).stage(Stage::Io)?;
    let poses: Vec<_> = rows.iter().map(|(_, p)| *p).collect();
    let noisy = perturb_poses(&poses, &noise).stage(Stage::Geometry)?;
    let out: Vec<_> = rows.iter().map(|(i, _)| *i).zip(noisy).collect();
    io::write_poses(&a.out, &out).stage(Stage::Io)?;
    let sidecar = PerturbSidecar {
        source: a.poses.clone(),
        source_sha256: digest("poses", &a.poses).stage(Stage::Io)?.sha256,
        noise,
        composition: "left".into(),
        translation_units: "world".into(),
    };
    let text = json(&sidecar).stage(Stage::Io)?;
    write_file(&sibling(&a.out, "noise.json"), text.as_bytes()).stage(Stage::Io)
}

fn cmd_ablate(a: AblateArgs) -> StageResult {
    let shape = SynthShape::named(&a.fixture).stage(Stage::Config)?;
    if a.seeds.is_empty() {
        return Err(invalid("--seeds must list at least one seed")).stage(Stage::Config);
    }
    let s = load_settings(&a.settings).stage(Stage::Config)?;
    let rows = ablate(&shape, a.points, &a.seeds, &s.reconstruct_config(), &s.metric_options())?;
    emit(a.out.as_deref(), &format_table(&rows))
}

fn cmd_sweep_to_cloud(a: SweepToCloudArgs) -> StageResult {
    let sweep = io::read_sweep(&a.masks, &a.poses, &a.calibration).stage(Stage::Io)?;
    let cloud = build_cloud_from_sweep(&sweep.masks, &sweep.calibration, &sweep.poses).stage(Stage::Geometry)?;
    log::info!("{} points from {} frames", cloud.len(), sweep.masks.len());
    io::write_cloud(&a.out, &cloud).stage(Stage::Io)
}
