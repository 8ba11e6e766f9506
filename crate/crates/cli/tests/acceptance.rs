//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. `ACCEPTANCE_ONLY=1,2,12` runs a subset.
//!
//! Reconstruction criteria use a reduced network (4 hidden layers of 64,
//! batch 2500) so the whole run fits a single-core desk budget.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use usrecon_cli::ablation::{fixture_cloud, run_fixture, FixtureRun, Variant};
use usrecon_core::eval::{
    closest_point_on_triangle, evaluate, metric_samples, percentile_nearest_rank, surface_distance_metrics,
    topology_report, total_angle_deficit, Genus, MetricOptions, MetricReport,
};
use usrecon_core::mesh::{iso_baseline, shapes};
use usrecon_core::nn::{Discriminator, DiscriminatorConfig, NetworkConfig};
use usrecon_core::pipeline::ReconstructConfig;
use usrecon_core::seed;
use usrecon_core::synth::SynthShape;
use usrecon_core::train::{
    adversarial_losses, generator_objective, loss_scc, loss_self, project_query, TrainConfig,
};
use usrecon_core::{SdfNetwork, TriangleMesh, Vec3};

const SEEDS: [u64; 3] = [0, 1, 2];
const FIXTURE_POINTS: usize = 5000;
const ITERATIONS: usize = 3000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fixture_config(seed: u64) -> ReconstructConfig {
    let mut c = ReconstructConfig { voxel_size: 0.0, resolution: 64, ..Default::default() };
    c.train.iterations = ITERATIONS;
    c.train.batch_size = 2500;
    c.train.seed = seed;
    c.train.network = NetworkConfig { hidden_layers: 4, width: 64, skip_layer: Some(2), ..NetworkConfig::default() };
    c
}

fn metric_options(seed: u64) -> MetricOptions {
    MetricOptions { seed, ..Default::default() }
}

/// Every evaluation made during the run, for the overlap identity check.
static REPORTS: std::sync::Mutex<Vec<MetricReport>> = std::sync::Mutex::new(Vec::new());

fn record(r: &MetricReport) {
    REPORTS.lock().unwrap().push(r.clone());
}

type RunKey = (&'static str, Variant, u64, usize);

fn fixture_run(shape: &'static str, variant: Variant, seed: u64, outliers: usize) -> &'static FixtureRun {
    static CACHE: OnceLock<std::sync::Mutex<HashMap<RunKey, &'static FixtureRun>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (shape, variant, seed, outliers);
    if let Some(r) = cache.lock().unwrap().get(&key) {
        return r;
    }
    let fixture = SynthShape::named(shape).unwrap();
    let cloud = fixture_cloud(&fixture, FIXTURE_POINTS, outliers, seed).unwrap();
    let cfg = variant.config(&fixture_config(seed));
    let run = run_fixture(&fixture, &cloud, &cfg, &metric_options(seed)).unwrap();
    record(&run.metrics);
    eprintln!(
        "  [{shape} {} seed {seed} outliers {outliers}] cd {:.5} hd {:.4} cc {} genus {:?} census {:?} in {:.0}s",
        variant.name(),
        run.metrics.cd_mm,
        run.metrics.hd_mm,
        run.topology.connected_components,
        run.topology.genus_per_component,
        run.census,
        run.seconds
    );
    let leaked: &'static FixtureRun = Box::leak(Box::new(run));
    cache.lock().unwrap().insert(key, leaked);
    leaked
}

// ---- 1, 2, 3: network gradients and initialization ----

fn random_vec(rng: &mut impl Rng, scale: f64) -> Vec3 {
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)) * scale
}

/// Generator loss assembled from the per-point public operations, without
/// the batched tape.
fn reference_loss(net: &SdfNetwork<f64>, disc: &Discriminator<f64>, qs: &[Vec3], ts: &[Vec3], cfg: &TrainConfig) -> f64 {
    let duals = net.forward_with_input_gradient(qs).unwrap();
    let projected: Vec<Vec3> = qs.iter().zip(&duals).map(|(q, d)| project_query(*q, *d)).collect();
    let pairs: Vec<(Vec3, Vec3)> = projected.iter().copied().zip(ts.iter().copied()).collect();
    let triples: Vec<(Vec3, Vec3, Vec3)> = duals.iter().zip(&pairs).map(|(d, (p, t))| (d.input_gradient, *p, *t)).collect();
    let values: Vec<f64> = duals.iter().map(|d| d.value).collect();
    let fake = disc.discriminator_forward(&values).unwrap();
    let real = disc.discriminator_forward(&vec![0.0; values.len()]).unwrap();
    let (g_adv, _) = adversarial_losses(&fake, &real);
    cfg.lambda_self * loss_self(&pairs) + cfg.lambda_scc * loss_scc(&triples) + cfg.lambda_g * g_adv
}

fn rows(points: &[Vec3]) -> ndarray::Array2<f64> {
    ndarray::Array2::from_shape_fn((points.len(), 3), |(i, j)| points[i][j])
}

fn criterion_1() -> Outcome {
    let mini = NetworkConfig { hidden_layers: 2, width: 8, skip_layer: Some(1), ..NetworkConfig::default() };
    let disc_cfg = DiscriminatorConfig { hidden: 8, ..DiscriminatorConfig::default() };
    let mut rng = seed::rng(1001);
    let mut worst: f64 = 0.0;
    for draw in 0..100u64 {
        // Alternate the reference weights with unit weights so both
        // constraint paths carry visible gradient.
        let cfg = if draw % 2 == 0 {
            TrainConfig::default()
        } else {
            TrainConfig { lambda_scc: 1.0, lambda_g: 1.0, ..TrainConfig::default() }
        };
        let mut net = SdfNetwork::<f64>::geometric_init(mini.clone(), 0.5, draw).unwrap();
        let mut p = net.params();
        for v in p.iter_mut() {
            *v += 0.3 * rng.sample::<f64, _>(StandardNormal);
        }
        net.set_params(&p).unwrap();
        let disc = Discriminator::<f64>::new(disc_cfg, 5000 + draw).unwrap();
        let qs: Vec<Vec3> = (0..8).map(|_| random_vec(&mut rng, 0.5)).collect();
        let ts: Vec<Vec3> = qs.iter().map(|q| q + random_vec(&mut rng, 0.1)).collect();
        let analytic = generator_objective(&net, &disc, rows(&qs).view(), rows(&ts).view(), &cfg)
            .unwrap()
            .gradients
            .flatten();
        let h = 1e-6;
        let mut probe = net.clone();
        let mut diff2 = 0.0;
        let mut norm2 = 0.0;
        for i in 0..p.len() {
            let mut q = p.clone();
            q[i] += h;
            probe.set_params(&q).unwrap();
            let up = reference_loss(&probe, &disc, &qs, &ts, &cfg);
            q[i] -= 2.0 * h;
            probe.set_params(&q).unwrap();
            let down = reference_loss(&probe, &disc, &qs, &ts, &cfg);
            let fd = (up - down) / (2.0 * h);
            diff2 += (analytic[i] - fd).powi(2);
            norm2 += fd * fd;
        }
        worst = worst.max((diff2 / norm2).sqrt());
    }
    outcome(worst <= 1e-3, format!("worst relative error {worst:.2e} over 100 draws (limit 1e-3)"))
}

fn criterion_2() -> Outcome {
    let mut net = SdfNetwork::<f64>::geometric_init(NetworkConfig::default(), 0.5, 77).unwrap();
    let mut rng = seed::rng(2002);
    let mut p = net.params();
    for v in p.iter_mut() {
        *v += 0.02 * rng.sample::<f64, _>(StandardNormal);
    }
    net.set_params(&p).unwrap();
    let qs: Vec<Vec3> = (0..1000)
        .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let duals = net.forward_with_input_gradient(&qs).unwrap();
    let tape = net.forward_tape(rows(&qs).view());
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (i, q) in qs.iter().enumerate() {
        let mut probes = Vec::with_capacity(6);
        for axis in 0..3 {
            let mut e = Vec3::zeros();
            e[axis] = h;
            probes.push(q + e);
            probes.push(q - e);
        }
        let f = net.forward_batch(&probes).unwrap();
        let fd = Vec3::new(f[0] - f[1], f[2] - f[3], f[4] - f[5]) / (2.0 * h);
        let taped = Vec3::new(tape.gradients[[i, 0]], tape.gradients[[i, 1]], tape.gradients[[i, 2]]);
        for g in [duals[i].input_gradient, taped] {
            worst = worst.max((g - fd).norm() / fd.norm());
        }
    }
    outcome(worst <= 1e-4, format!("worst relative error {worst:.2e} on 1000 points, dual and taped (limit 1e-4)"))
}

fn criterion_3() -> Outcome {
    let net = SdfNetwork::<f64>::geometric_init(NetworkConfig::default(), 0.5, 0).unwrap();
    let mut rng = seed::rng(3003);
    let qs: Vec<Vec3> = (0..10_000)
        .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let f = net.forward_batch(&qs).unwrap();
    let g: Vec<f64> = qs.iter().map(|q| q.norm() - 0.5).collect();
    let n = f.len() as f64;
    let (mf, mg) = (f.iter().sum::<f64>() / n, g.iter().sum::<f64>() / n);
    let cov: f64 = f.iter().zip(&g).map(|(a, b)| (a - mf) * (b - mg)).sum();
    let vf: f64 = f.iter().map(|a| (a - mf).powi(2)).sum();
    let vg: f64 = g.iter().map(|b| (b - mg).powi(2)).sum();
    let r = cov / (vf * vg).sqrt();
    outcome(r >= 0.9, format!("Pearson r = {r:.4} over 10^4 samples (limit 0.9)"))
}

// ---- 4 to 8: fixture reconstructions ----

fn describe(run: &FixtureRun) -> String {
    format!(
        "CD {:.4}, HD {:.4}, watertight {}, CC {}, genus {:?}, {:.0}s",
        run.metrics.cd_mm,
        run.metrics.hd_mm,
        run.topology.watertight,
        run.topology.connected_components,
        run.topology.genus_per_component,
        run.seconds
    )
}

fn criterion_4() -> Outcome {
    let run = fixture_run("sphere", Variant::Full, 0, 0);
    let t = &run.topology;
    let pass = run.metrics.cd_mm <= 0.02
        && t.watertight
        && t.connected_components == 1
        && t.genus_per_component == [Genus::Closed(0)]
        && run.seconds <= 600.0;
    outcome(pass, describe(run))
}

fn criterion_5() -> Outcome {
    let run = fixture_run("torus", Variant::Full, 0, 0);
    let t = &run.topology;
    let pass = t.connected_components == 1 && t.genus_per_component == [Genus::Closed(1)] && run.seconds <= 600.0;
    outcome(pass, describe(run))
}

fn criterion_6() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in SEEDS {
        let with = fixture_run("sphere", Variant::Full, s, 0).census.map(|c| c.1);
        let without = fixture_run("sphere", Variant::OscAdl, s, 0).census.map(|c| c.1);
        match (with, without) {
            (Some(a), Some(b)) => {
                pass &= a < b;
                parts.push(format!("seed {s}: {a:.1} vs {b:.1}"));
            }
            _ => {
                pass = false;
                parts.push(format!("seed {s}: no census"));
            }
        }
    }
    outcome(pass, format!("census sd with vs without SCC, {}", parts.join("; ")))
}

fn criterion_7() -> Outcome {
    let mean = |v: Variant| SEEDS.iter().map(|&s| fixture_run("sphere", v, s, 0).metrics.cd_mm).sum::<f64>() / 3.0;
    let per_seed = |v: Variant| {
        SEEDS.iter().map(|&s| format!("{:.4}", fixture_run("sphere", v, s, 0).metrics.cd_mm)).collect::<Vec<_>>().join("/")
    };
    let (full, base) = (mean(Variant::Full), mean(Variant::Baseline));
    outcome(
        full <= base,
        format!(
            "mean CD full {full:.4} ({}) vs baseline {base:.4} ({})",
            per_seed(Variant::Full),
            per_seed(Variant::Baseline)
        ),
    )
}

fn criterion_8() -> Outcome {
    let clean = fixture_run("sphere", Variant::Full, 0, 0);
    let noisy = fixture_run("sphere", Variant::Full, 0, 100);
    // Compare in the fixture frame: the outliers change the normalization.
    let (cd_clean, cd_noisy) = (clean.metrics.cd_mm * clean.scale, noisy.metrics.cd_mm * noisy.scale);
    let shape = SynthShape::sphere();
    let cell = 2.0 * (shape.volume() / FIXTURE_POINTS as f64).cbrt();
    let iso_cc = |outliers: usize| {
        let cloud = fixture_cloud(&shape, FIXTURE_POINTS, outliers, 0).unwrap();
        topology_report(&iso_baseline(&cloud, cell).unwrap()).connected_components
    };
    let (iso_clean, iso_noisy) = (iso_cc(0), iso_cc(100));
    let fit_cc = noisy.topology.connected_components;
    outcome(
        cd_noisy <= 2.0 * cd_clean && iso_noisy > 1,
        format!(
            "fixture-frame CD {cd_noisy:.5} with 100 outliers vs {cd_clean:.5} clean (limit 2x); \
             network CC {fit_cc}; iso baseline CC {iso_noisy} (clean {iso_clean}, cell {cell:.3})"
        ),
    )
}

// ---- 9, 10: metric oracles ----

fn micro_meshes() -> Vec<(&'static str, TriangleMesh)> {
    let tet = shapes::tetrahedron();
    let cube = shapes::cuboid(Vec3::new(-0.3, -0.2, -0.1), Vec3::new(0.4, 0.2, 0.5));
    let mut two = tet.clone();
    let shifted = tet.map_vertices(|v| v + Vec3::new(3.0, 0.0, 0.0));
    let base = two.vertices.len();
    two.vertices.extend(shifted.vertices);
    two.faces.extend(shifted.faces.iter().map(|f| f.map(|i| i + base)));
    let mut open = cube.clone();
    open.faces.truncate(10);
    let mut fin = cube.clone();
    let [a, b, _] = fin.faces[0];
    fin.vertices.push(Vec3::new(2.0, 2.0, 2.0));
    fin.faces.push([a, b, fin.vertices.len() - 1]);
    vec![
        ("tetrahedron", tet),
        ("cuboid", cube),
        ("icosphere", shapes::icosphere(Vec3::new(0.1, 0.0, 0.0), 0.6, 1)),
        ("torus", shapes::torus(0.5, 0.2, 8, 4)),
        ("two tetrahedra", two),
        ("open box", open),
        ("finned box", fin),
    ]
}

fn brute_directed(from: &[Vec3], to: &TriangleMesh) -> Vec<f64> {
    from.iter()
        .map(|p| {
            let mut best = f64::INFINITY;
            for f in &to.faces {
                let [a, b, c] = f.map(|i| to.vertices[i]);
                best = best.min((closest_point_on_triangle(p, &a, &b, &c) - p).norm());
            }
            best
        })
        .collect()
}

/// `(asd, cd, cd_squared, hd, hd95)` by exhaustive search.
fn brute_distances(a: &TriangleMesh, b: &TriangleMesh, samples: usize, seed: u64) -> [f64; 5] {
    let da = brute_directed(&metric_samples(a, samples, seed).unwrap(), b);
    let db = brute_directed(&metric_samples(b, samples, seed).unwrap(), a);
    let mean = |d: &[f64]| d.iter().sum::<f64>() / d.len() as f64;
    let mean_sq = |d: &[f64]| d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64;
    let max = |d: &[f64]| d.iter().copied().fold(0.0, f64::max);
    let p95 = |d: &[f64]| {
        let mut s = d.to_vec();
        s.sort_by(f64::total_cmp);
        s[((0.95 * s.len() as f64).ceil() as usize).max(1) - 1]
    };
    let avg = 0.5 * (mean(&da) + mean(&db));
    [avg, avg, 0.5 * (mean_sq(&da) + mean_sq(&db)), max(&da).max(max(&db)), p95(&da).max(p95(&db))]
}

/// Per component `(faces, vertices, edges, chi, genus or None)` plus the
/// watertight flag, by breadth-first search over shared edges.
fn brute_topology(m: &TriangleMesh) -> (Vec<(usize, usize, usize, i64, Option<i64>)>, bool) {
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut edge_faces: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (fi, f) in m.faces.iter().enumerate() {
        for k in 0..3 {
            edge_faces.entry(key(f[k], f[(k + 1) % 3])).or_default().push(fi);
        }
    }
    let mut seen = vec![false; m.faces.len()];
    let mut comps = Vec::new();
    for start in 0..m.faces.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut faces = Vec::new();
        while let Some(f) = stack.pop() {
            faces.push(f);
            let t = m.faces[f];
            for k in 0..3 {
                for &g in &edge_faces[&key(t[k], t[(k + 1) % 3])] {
                    if !seen[g] {
                        seen[g] = true;
                        stack.push(g);
                    }
                }
            }
        }
        let mut verts: Vec<usize> = faces.iter().flat_map(|&f| m.faces[f]).collect();
        verts.sort_unstable();
        verts.dedup();
        let mut edges: Vec<(usize, usize)> =
            faces.iter().flat_map(|&f| { let t = m.faces[f]; (0..3).map(move |k| key(t[k], t[(k + 1) % 3])) }).collect();
        edges.sort_unstable();
        edges.dedup();
        let closed = edges.iter().all(|e| edge_faces[e].len() == 2);
        let chi = verts.len() as i64 - edges.len() as i64 + faces.len() as i64;
        comps.push((faces.len(), verts.len(), edges.len(), chi, closed.then_some((2 - chi) / 2)));
    }
    comps.sort_unstable();
    (comps, edge_faces.values().all(|f| f.len() == 2))
}

fn criterion_9() -> Outcome {
    let meshes = micro_meshes();
    let mut failures = Vec::new();
    let mut checks = 0;
    for (name, m) in &meshes {
        assert!(m.faces.len() <= 100, "{name} is not a micro mesh");
        let t = topology_report(m);
        let mut got: Vec<(usize, usize, usize, i64, Option<i64>)> = t
            .components
            .iter()
            .map(|c| {
                let g = match c.genus {
                    Genus::Closed(g) => Some(g),
                    Genus::NonManifold => None,
                };
                (c.faces, c.vertices, c.edges, c.euler_characteristic, g)
            })
            .collect();
        got.sort_unstable();
        let expect = brute_topology(m);
        checks += 1;
        if (got.clone(), t.watertight) != expect || t.connected_components != expect.0.len() {
            failures.push(format!("topology of {name}: {got:?} vs {expect:?}"));
        }
    }
    for (i, (na, a)) in meshes.iter().enumerate() {
        for (nb, b) in &meshes {
            let seed = 90 + i as u64;
            let d = surface_distance_metrics(a, b, 500, seed).unwrap();
            let got = [d.asd, d.cd, d.cd_squared, d.hd, d.hd95];
            let expect = brute_distances(a, b, 500, seed);
            checks += 1;
            if got != expect {
                failures.push(format!("distances {na} -> {nb}: {got:?} vs {expect:?}"));
            }
            if let Ok(r) = evaluate(a, b, &MetricOptions { samples: 500, seed, ..Default::default() }) {
                record(&r);
            }
        }
    }
    let reports = REPORTS.lock().unwrap();
    let mut worst: f64 = 0.0;
    let mut with_overlap = 0;
    for r in reports.iter() {
        if let (Some(d), Some(j)) = (r.dsc, r.iou) {
            with_overlap += 1;
            worst = worst.max((d - 2.0 * j / (1.0 + j)).abs());
        }
    }
    let _ = percentile_nearest_rank;
    outcome(
        failures.is_empty() && worst <= 1e-9 && with_overlap > 0,
        if failures.is_empty() {
            format!(
                "{checks} exact oracle comparisons on {} micro meshes; dsc identity worst {worst:.1e} over {with_overlap} evaluations",
                meshes.len()
            )
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_10() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for name in ["sphere", "torus"] {
        let m = SynthShape::named(name).unwrap().reference_mesh();
        let chi = m.euler_characteristic();
        let err = (total_angle_deficit(&m) - 2.0 * PI * chi as f64).abs();
        worst = worst.max(err);
        parts.push(format!("{name} chi {chi} error {err:.1e}"));
    }
    outcome(worst <= 1e-6, parts.join(", "))
}

// ---- 11: determinism through the command line ----

fn usrecon(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_usrecon")).args(args).env_remove("FUNSR_SEED").output().unwrap()
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let cloud = d("sphere.xyz");
    let synth = usrecon(&["synth", "--shape", "sphere", "--points", "5000", "--seed", "0", "--cloud", &s(&cloud)]);
    assert!(synth.status.success());
    let first = usrecon(&[
        "reconstruct", "--cloud", &s(&cloud), "--out", &s(&d("run0.ply")), "--deterministic", "--iterations", "300",
        "--set", "voxel_size=0", "--set", "hidden_layers=4", "--set", "width=64", "--set", "skip_layer=2",
        "--set", "batch_size=2500",
    ]);
    if !first.status.success() {
        return outcome(false, format!("first run failed: {}", String::from_utf8_lossy(&first.stderr)));
    }
    let manifest = s(&d("run0.manifest.json"));
    for name in ["run1.ply", "run2.ply"] {
        let out = usrecon(&["reconstruct", "--manifest", &manifest, "--out", &s(&d(name))]);
        if !out.status.success() {
            return outcome(false, format!("manifest rerun failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
    }
    let read = |n: &str| std::fs::read(d(n)).unwrap();
    let meshes_equal = read("run1.ply") == read("run2.ply") && read("run0.ply") == read("run1.ply");
    let losses_equal = read("run1.loss.csv") == read("run2.loss.csv") && read("run0.loss.csv") == read("run1.loss.csv");
    outcome(
        meshes_equal && losses_equal,
        format!(
            "mesh files identical: {meshes_equal} ({} bytes), loss CSVs identical: {losses_equal} ({} rows)",
            read("run1.ply").len(),
            String::from_utf8(read("run1.loss.csv")).unwrap().lines().count() - 1
        ),
    )
}

fn criterion_12() -> Outcome {
    let got = adversarial_losses(&[0.5], &[0.5]);
    outcome(got == (0.125, 0.25), format!("(generator, discriminator) = {got:?}"))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "parameter gradients of the full generator loss", criterion_1),
        (2, "input gradient of the full-size network", criterion_2),
        (3, "geometric initialization approximates a sphere", criterion_3),
        (4, "sphere fixture reconstruction", criterion_4),
        (5, "torus fixture keeps its hole", criterion_5),
        (6, "sign consistency stabilizes the interior census", criterion_6),
        (7, "ablation ordering, full vs baseline", criterion_7),
        (8, "outlier robustness", criterion_8),
        (9, "metric oracles and overlap identity", criterion_9),
        (10, "Gauss-Bonnet on fixture meshes", criterion_10),
        (11, "bit-identical reruns from a manifest", criterion_11),
        (12, "adversarial loss spot values", criterion_12),
    ];
    let only: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut lines = Vec::new();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let t0 = Instant::now();
        let o = check();
        let line = format!(
            "{} {id:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        println!("{line}");
        failed += usize::from(!o.pass);
        lines.push(line);
    }
    println!("\nacceptance summary");
    for l in &lines {
        println!("{l}");
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
