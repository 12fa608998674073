//! Command-line surface for the repulse toolkit: environment generation,
//! seed construction, growth, sampling, augmentation, full dataset runs,
//! verification, evaluation, and the persistence baseline.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use repulse_core::cloud::{augment, read_cloud_csv, sample_cloud, write_cloud_csv, AugmentConfig};
use repulse_core::growth::{grow_staged, GrowthConfig};
use repulse_core::mesh::{io as mesh_io, TriangleMesh};
use repulse_core::metrics::{render_csv, render_text, Aggregation};
use repulse_core::pipeline::{
    evaluate_cloud_dir, evaluate_dataset, normalize_scene, read_manifest, run_pipeline,
    verify_dataset, DatasetConfig,
};
use repulse_core::rips::{
    betti_curve, build_rips_guarded, critical_radii, persistence, write_barcode_csv,
    DEFAULT_MAX_POINTS,
};
use repulse_core::seeds::{make_linked_pair, make_seed};
use repulse_core::topology::scene_summary;
use repulse_core::wfc::{
    collapse, default_tileset, voxelize, BoundaryRule, EnvironmentFile, OccupancyGrid,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "repulse",
    about = "Synthetic genus-labeled 3D dataset toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a maze environment with wave function collapse.
    GenEnv(GenEnvArgs),
    /// Construct seed meshes of prescribed genus.
    GenSeeds(GenSeedsArgs),
    /// Grow meshes inside an environment.
    Grow(GrowArgs),
    /// Sample a labeled point cloud from a scene mesh.
    Sample(SampleArgs),
    /// Apply the training augmentation suite to a cloud CSV.
    Augment(AugmentArgs),
    /// Run the full dataset pipeline.
    Dataset(DatasetArgs),
    /// Re-verify a dataset against its manifest.
    Verify(VerifyArgs),
    /// Score per-point genus predictions.
    Eval(EvalArgs),
    /// Vietoris-Rips persistence barcode of a cloud.
    Rips(RipsArgs),
}

#[derive(Args)]
struct GenEnvArgs {
    /// Grid dimensions in tiles, e.g. 6,6,6.
    #[arg(long, default_value = "6,6,6", value_parser = parse_dims)]
    dims: (usize, usize, usize),
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    cell_size: f64,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Optional OFF export of the barrier cells for visualization.
    #[arg(long)]
    barrier_off: Option<PathBuf>,
}

#[derive(Args)]
struct GenSeedsArgs {
    /// Genus of each seed to generate, e.g. --genus 0 --genus 3.
    #[arg(long, required_unless_present = "linked")]
    genus: Vec<u64>,
    /// Generate an interlinked pair instead, e.g. --linked 1,3.
    #[arg(long, value_parser = parse_pair, conflicts_with = "genus")]
    linked: Option<(u64, u64)>,
    /// Output directory for OFF files.
    #[arg(long)]
    out: PathBuf,
    /// Also write OBJ files with object groups.
    #[arg(long)]
    obj: bool,
}

#[derive(Args)]
struct GrowArgs {
    /// Input mesh files (OFF or OBJ), one per object.
    #[arg(long, required = true)]
    mesh: Vec<PathBuf>,
    /// Environment JSON from gen-env; omit for unconstrained growth.
    #[arg(long)]
    env: Option<PathBuf>,
    /// Growth config JSON (fields of the growth section); flags override.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    iterations: Option<u32>,
    /// Emit snapshots at these accepted-iteration counts, e.g. 10,20.
    #[arg(long, value_delimiter = ',')]
    stages: Vec<u32>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Growth trace CSV path.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Scene mesh (OFF or OBJ); per-object genera come from the topology
    /// oracle on its connected components.
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value_t = 4096)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Normalize the scene to this bounding-cube edge before sampling.
    #[arg(long)]
    normalize: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    cloud: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Augmentation config JSON; defaults to the training settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DatasetArgs {
    /// Dataset config JSON; defaults to the full-scale configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the master seed from --seed even when a config is given.
    #[arg(long)]
    override_seed: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Also print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset manifest; mutually exclusive with --clouds.
    #[arg(long, required_unless_present = "clouds", conflicts_with = "clouds")]
    manifest: Option<PathBuf>,
    /// Directory of cloud CSVs to score instead of a manifest.
    #[arg(long)]
    clouds: Option<PathBuf>,
    /// Number of genus classes for directory mode.
    #[arg(long, default_value_t = 4)]
    classes: usize,
    /// Directory of row-aligned prediction files (one label per line;
    /// scene_<id>.pred for manifests, <cloud stem>.pred for directories).
    #[arg(long)]
    pred: PathBuf,
    /// Average per-scene metrics instead of summing confusion matrices.
    #[arg(long = "macro")]
    macro_mode: bool,
    #[arg(long)]
    json: bool,
    /// Also write the per-class table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RipsArgs {
    /// Cloud CSV (only coordinates are used).
    #[arg(long)]
    cloud: PathBuf,
    #[arg(long)]
    max_radius: f64,
    #[arg(long, default_value_t = 2)]
    max_dim: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    max_points: usize,
    /// Barcode CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Optional Betti-curve CSV over the critical radii.
    #[arg(long)]
    betti_curve: Option<PathBuf>,
}

fn parse_dims(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [x, y, z] => Ok((*x, *y, *z)),
        _ => Err("expected three comma-separated dimensions".into()),
    }
}

fn parse_pair(s: &str) -> Result<(u64, u64), String> {
    let parts: Vec<u64> = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err("expected two comma-separated genera".into()),
    }
}

fn load_env(path: &Path) -> Result<OccupancyGrid> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading environment {}", path.display()))?;
    let file: EnvironmentFile = serde_json::from_str(&text)?;
    Ok(voxelize(&file.to_grid(), &default_tileset(), file.cell_size))
}

const EXIT_PARTIAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            // Configuration-shaped failures exit 2, everything else 1.
            let msg = format!("{err:#}");
            if msg.contains("config") || msg.contains("unknown field") || msg.contains("invalid") {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_PARTIAL)
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::GenEnv(args) => {
            let tiles = default_tileset();
            let grid = collapse(args.dims, &tiles, args.seed, BoundaryRule::Closed)?;
            let file = EnvironmentFile::from_grid(&grid, args.cell_size);
            std::fs::write(&args.out, serde_json::to_string_pretty(&file)?)
                .with_context(|| format!("writing {}", args.out.display()))?;
            println!(
                "environment {}x{}x{} tiles, seed {} -> {}",
                args.dims.0,
                args.dims.1,
                args.dims.2,
                args.seed,
                args.out.display()
            );
            if let Some(off) = args.barrier_off {
                let occ = voxelize(&grid, &tiles, args.cell_size);
                mesh_io::write_off_file(&occ.barrier_mesh(), &off)?;
                println!(
                    "barrier cells: {} -> {}",
                    occ.occupied_count(),
                    off.display()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GenSeeds(args) => {
            std::fs::create_dir_all(&args.out)
                .with_context(|| format!("creating {}", args.out.display()))?;
            let mut meshes: Vec<(String, TriangleMesh)> = Vec::new();
            if let Some((a, b)) = args.linked {
                let (ma, mb) = make_linked_pair(a, b)?;
                meshes.push((format!("seed_linked_g{a}_a"), ma));
                meshes.push((format!("seed_linked_g{b}_b"), mb));
            } else {
                for &g in &args.genus {
                    meshes.push((format!("seed_g{g}"), make_seed(g)));
                }
            }
            for (name, mesh) in &meshes {
                let genus = repulse_core::topology::genus_of_component(mesh)?;
                let path = args.out.join(format!("{name}.off"));
                mesh_io::write_off_file(mesh, &path)?;
                println!(
                    "{} -> genus {}, V={}, F={}",
                    path.display(),
                    genus,
                    mesh.vertex_count(),
                    mesh.triangle_count()
                );
                if args.obj {
                    mesh_io::write_obj_file(mesh, args.out.join(format!("{name}.obj")))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Grow(args) => {
            let meshes: Vec<TriangleMesh> = args
                .mesh
                .iter()
                .map(|p| mesh_io::read_mesh_file(p).map_err(anyhow::Error::from))
                .collect::<Result<_>>()?;
            let env = match &args.env {
                Some(path) => load_env(path)?,
                None => OccupancyGrid::empty((1, 1, 1), 1e6),
            };
            let mut cfg = GrowthConfig::for_meshes(&meshes, args.seed);
            if let Some(path) = &args.config {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                let section: repulse_core::pipeline::GrowthSection = serde_json::from_str(&text)?;
                cfg.w_area = section.w_area;
                cfg.w_rep = section.w_rep;
                cfg.w_env = section.w_env;
                cfg.step_size = section.step_size;
                cfg.max_iterations = section.max_iterations;
                cfg.remesh_every = section.remesh_every;
                cfg.far_field_theta = section.far_field_theta;
                if let Some([lo, hi]) = section.edge_bounds {
                    cfg.edge_min = lo;
                    cfg.edge_max = hi;
                }
            }
            if let Some(iters) = args.iterations {
                cfg.max_iterations = iters;
            }
            std::fs::create_dir_all(&args.out)
                .with_context(|| format!("creating {}", args.out.display()))?;
            let staged = grow_staged(&meshes, &env, &cfg, &args.stages)?;
            let (grown, trace, stages) = (staged.meshes, staged.trace, staged.snapshots);
            for (i, mesh) in grown.iter().enumerate() {
                let path = args.out.join(format!("grown_{i}.off"));
                mesh_io::write_off_file(mesh, &path)?;
            }
            for (stage_idx, stage_meshes) in stages.iter().enumerate() {
                for (i, mesh) in stage_meshes.iter().enumerate() {
                    let path = args
                        .out
                        .join(format!("stage_{}_obj_{i}.off", args.stages[stage_idx]));
                    mesh_io::write_off_file(mesh, &path)?;
                }
            }
            if let Some(trace_path) = &args.trace {
                let file = std::fs::File::create(trace_path)
                    .with_context(|| format!("creating {}", trace_path.display()))?;
                trace.write_csv(file)?;
            }
            println!(
                "grew {} object(s): {} of {} iterations accepted, final area {:.3}",
                grown.len(),
                trace.accepted_count(),
                cfg.max_iterations,
                grown.iter().map(|m| m.surface_area()).sum::<f64>()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample(args) => {
            let union = mesh_io::read_mesh_file(&args.mesh)?;
            let mut components = union.connected_components();
            if let Some(edge) = args.normalize {
                normalize_scene(&mut components, edge);
            }
            let summary = scene_summary(&components)?;
            let genera: Vec<u64> = summary.components.iter().map(|c| c.genus).collect();
            let cloud = sample_cloud(&components, &genera, args.n, args.seed)?;
            let file = std::fs::File::create(&args.out)
                .with_context(|| format!("creating {}", args.out.display()))?;
            write_cloud_csv(&cloud, file)?;
            println!(
                "sampled {} points from {} object(s) with genera {:?} -> {}",
                cloud.len(),
                components.len(),
                genera,
                args.out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Augment(args) => {
            let cloud = read_cloud_csv(
                std::fs::File::open(&args.cloud)
                    .with_context(|| format!("opening {}", args.cloud.display()))?,
            )?;
            let mut cfg = match &args.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading config {}", path.display()))?;
                    serde_json::from_str::<AugmentConfig>(&text)?
                }
                None => AugmentConfig::default(),
            };
            cfg.rng_seed = args.seed;
            let out = augment(&cloud, &cfg);
            let file = std::fs::File::create(&args.out)
                .with_context(|| format!("creating {}", args.out.display()))?;
            write_cloud_csv(&out, file)?;
            println!("augmented {} points -> {}", out.len(), args.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Dataset(args) => {
            let mut cfg = match &args.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading config {}", path.display()))?;
                    DatasetConfig::from_json(&text)?
                }
                None => DatasetConfig::default(),
            };
            if args.config.is_none() || args.override_seed {
                cfg.master_seed = args.seed;
            }
            let summary = run_pipeline(&cfg, &args.out)?;
            for (split, n) in &summary.per_split {
                println!("{split}: {n} scenes");
            }
            println!(
                "done: {} ok, {} failed, manifest at {}",
                summary.scenes_ok,
                summary.scenes_failed,
                summary.manifest_path.display()
            );
            if summary.scenes_failed > 0 {
                Ok(ExitCode::from(EXIT_PARTIAL))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Verify(args) => {
            let manifest = read_manifest(&args.manifest)?;
            let root = args
                .manifest
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("."));
            let report = verify_dataset(&manifest, &root)?;
            for scene in &report.scenes {
                if scene.pass {
                    let topo = scene.topology.as_ref().expect("passing scene has topology");
                    println!(
                        "scene {}: PASS genera {:?} betti {:?} chi {}",
                        scene.scene_id, topo.genera, topo.betti, topo.chi
                    );
                } else {
                    println!(
                        "scene {}: FAIL {}",
                        scene.scene_id,
                        scene.details.join("; ")
                    );
                }
            }
            println!("verified: {} pass, {} fail", report.passed, report.failed);
            if args.json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
            if report.failed > 0 {
                Ok(ExitCode::from(EXIT_PARTIAL))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Eval(args) => {
            let mode = if args.macro_mode {
                Aggregation::MacroPerScene
            } else {
                Aggregation::Micro
            };
            let report = match (&args.manifest, &args.clouds) {
                (Some(manifest_path), _) => {
                    let manifest = read_manifest(manifest_path)?;
                    let root = manifest_path
                        .parent()
                        .map(Path::to_path_buf)
                        .unwrap_or_else(|| PathBuf::from("."));
                    evaluate_dataset(&manifest, &root, &args.pred, mode)?
                }
                (None, Some(clouds)) => {
                    evaluate_cloud_dir(clouds, &args.pred, args.classes, mode)?
                }
                (None, None) => bail!("config error: pass --manifest or --clouds"),
            };
            print!("{}", render_text(&report));
            if args.json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
            if let Some(csv_path) = &args.csv {
                std::fs::write(csv_path, render_csv(&report))
                    .with_context(|| format!("writing {}", csv_path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Rips(args) => {
            let cloud = read_cloud_csv(
                std::fs::File::open(&args.cloud)
                    .with_context(|| format!("opening {}", args.cloud.display()))?,
            )?;
            if args.max_radius <= 0.0 {
                bail!("config error: --max-radius must be positive");
            }
            let filtration = build_rips_guarded(
                &cloud.points,
                args.max_radius,
                args.max_dim,
                args.max_points,
            )?;
            let barcode = persistence(&filtration);
            let file = std::fs::File::create(&args.out)
                .with_context(|| format!("creating {}", args.out.display()))?;
            write_barcode_csv(&barcode, file)?;
            println!(
                "{} points, {} simplices, {} dim-0 bars, {} dim-1 bars -> {}",
                cloud.len(),
                filtration.simplices.len(),
                barcode.dim0.len(),
                barcode.dim1.len(),
                args.out.display()
            );
            if let Some(curve_path) = &args.betti_curve {
                let radii = critical_radii(&barcode);
                let curve = betti_curve(&barcode, &radii);
                let mut text = String::from("radius,beta0,beta1\n");
                for (r, b0, b1) in &curve {
                    text.push_str(&format!("{r:.8e},{b0},{b1}\n"));
                }
                std::fs::write(curve_path, text)
                    .with_context(|| format!("writing {}", curve_path.display()))?;
                // Report the widest stable plateau as the suggested reading.
                let mut best: Option<(f64, usize, usize, f64)> = None;
                for window in curve.windows(2) {
                    let (r0, b0, b1) = window[0];
                    let (r1, _, _) = window[1];
                    let width = r1 - r0;
                    if best.is_none_or(|(.., w)| width > w) {
                        best = Some((r0, b0, b1, width));
                    }
                }
                if let Some((r, b0, b1, width)) = best {
                    println!(
                        "widest plateau: radius {r:.4} (+{width:.4}) with (beta0, beta1) = ({b0}, {b1})"
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
