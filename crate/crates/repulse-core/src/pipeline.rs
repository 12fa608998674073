//! End-to-end dataset pipeline: plan balanced scenes, generate each one
//! (environment -> seeds -> growth -> normalization -> verification ->
//! sampling), and write the dataset directory with its manifest.
//!
//! Every per-scene random decision derives from `master_seed` and the scene
//! id, so generation is deterministic regardless of worker scheduling, and a
//! rerun with the same config is byte-identical. Scenes that fail
//! verification are regenerated with advanced seeds (up to 3 retries) and
//! recorded as failed if they never pass; the pipeline itself always
//! completes.

use crate::cloud::{read_cloud_csv, sample_cloud, write_cloud_csv, LabeledCloud};
use crate::growth::{grow, GrowthConfig, GrowthError};
use crate::mesh::{detect_self_intersections, io as mesh_io, MeshError, TriangleMesh, Vec3};
use crate::metrics::{Aggregation, ConfusionMatrix, MetricsError, MetricsReport};
use crate::par::map_slots;
use crate::rng::{derive_seed, rng_from, Stream};
use crate::seeds::{place_seeds, SeedError, SeedSpec};
use crate::topology::{scene_summary, TopologyError, TopologySummary};
use crate::wfc::{collapse, default_tileset, voxelize, BoundaryRule, WfcError};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Cloud(#[from] crate::cloud::CloudError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest references missing scene file {0}")]
    MissingFile(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Growth settings of a dataset config; remeshing bounds default to
/// (0.5, 2.0) x mean seed edge length per scene when not given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthSection {
    pub w_area: f64,
    pub w_rep: f64,
    pub w_env: f64,
    pub step_size: f64,
    pub max_iterations: u32,
    pub remesh_every: u32,
    pub edge_bounds: Option<[f64; 2]>,
    pub far_field_theta: Option<f64>,
}

impl Default for GrowthSection {
    fn default() -> Self {
        let g = GrowthConfig::default();
        GrowthSection {
            w_area: g.w_area,
            w_rep: g.w_rep,
            w_env: g.w_env,
            step_size: g.step_size,
            max_iterations: 60,
            remesh_every: g.remesh_every,
            edge_bounds: None,
            far_field_theta: None,
        }
    }
}

/// Dataset configuration; the JSON config file mirrors these field names and
/// rejects unknown keys. Defaults are the full-scale dataset shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub counts: SplitCounts,
    /// Inclusive range of objects per scene.
    pub objects_per_scene: [usize; 2],
    /// Inclusive range of genus labels.
    pub genus_range: [u64; 2],
    pub points_per_cloud: usize,
    /// Environment size in tiles (each tile is 3x3x3 cells).
    pub env_dims: [usize; 3],
    pub cell_size: f64,
    pub growth: GrowthSection,
    /// Fraction of eligible multi-object scenes that get a linked pair.
    pub linked_fraction: f64,
    pub master_seed: u64,
    /// Edge length of the target bounding cube scenes are normalized to.
    pub normalization: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            counts: SplitCounts {
                train: 5725,
                val: 1610,
                test: 965,
            },
            objects_per_scene: [1, 3],
            genus_range: [0, 3],
            points_per_cloud: 4096,
            env_dims: [6, 6, 6],
            cell_size: 1.0,
            growth: GrowthSection::default(),
            linked_fraction: 0.15,
            master_seed: 0,
            normalization: 100.0,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.counts.train == 0 || self.counts.val == 0 || self.counts.test == 0 {
            return Err(PipelineError::Config("split counts must be positive".into()));
        }
        let [lo, hi] = self.objects_per_scene;
        if lo < 1 || hi > 3 || lo > hi {
            return Err(PipelineError::Config(
                "objects_per_scene must be within [1, 3]".into(),
            ));
        }
        if self.genus_range[0] > self.genus_range[1] {
            return Err(PipelineError::Config("genus_range inverted".into()));
        }
        if self.points_per_cloud == 0 {
            return Err(PipelineError::Config("points_per_cloud must be positive".into()));
        }
        if self.env_dims.contains(&0) {
            return Err(PipelineError::Config("env_dims must be positive".into()));
        }
        if !self.normalization.is_finite() || self.normalization <= 0.0 {
            return Err(PipelineError::Config("normalization must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.linked_fraction) {
            return Err(PipelineError::Config("linked_fraction must be in [0,1]".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: DatasetConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

/// One planned scene: genera per object, optional linked pair (object
/// indices), and the growth iteration budget that sets its complexity stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePlan {
    pub scene_id: u64,
    pub split: Split,
    pub object_genera: Vec<u64>,
    pub linked: Option<(usize, usize)>,
    pub growth_iterations: u32,
}

#[derive(Debug, Clone)]
pub struct DatasetPlan {
    pub scenes: Vec<ScenePlan>,
    pub warnings: Vec<String>,
}

/// A balanced drawing bag: refills with a shuffle whenever it empties, so
/// any prefix of draws is balanced within one refill.
struct Bag<T: Copy> {
    values: Vec<T>,
    pending: Vec<T>,
}

impl<T: Copy> Bag<T> {
    fn new(values: Vec<T>) -> Self {
        Bag {
            values,
            pending: Vec::new(),
        }
    }

    fn draw(&mut self, rng: &mut impl Rng) -> T {
        if self.pending.is_empty() {
            self.pending = self.values.clone();
            self.pending.shuffle(rng);
        }
        self.pending.pop().expect("bag refilled")
    }
}

/// Stage fractions of the configured growth budget, cycled across scenes for
/// varied deformation complexity.
const STAGE_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Plans the dataset: per split, object counts are balanced across the
/// configured range (each within one of count/range); genus labels are
/// balanced globally across all planned objects; a configurable fraction of
/// eligible multi-object scenes carries a linked pair. Deterministic in the
/// master seed.
pub fn plan_dataset(cfg: &DatasetConfig) -> Result<DatasetPlan, PipelineError> {
    cfg.validate()?;
    let mut rng = rng_from(derive_seed(cfg.master_seed, Stream::Plan, 0));
    let object_counts: Vec<usize> = (cfg.objects_per_scene[0]..=cfg.objects_per_scene[1]).collect();
    let genera: Vec<u64> = (cfg.genus_range[0]..=cfg.genus_range[1]).collect();
    let mut genus_bag = Bag::new(genera.clone());
    let mut stage_bag = Bag::new(STAGE_FRACTIONS.to_vec());

    let mut scenes = Vec::with_capacity(cfg.counts.total());
    let mut scene_id = 0u64;
    for (split, count) in [
        (Split::Train, cfg.counts.train),
        (Split::Val, cfg.counts.val),
        (Split::Test, cfg.counts.test),
    ] {
        // Object-count bag resets per split so each split is balanced.
        let mut count_bag = Bag::new(object_counts.clone());
        for _ in 0..count {
            let n_objects = count_bag.draw(&mut rng);
            let object_genera: Vec<u64> =
                (0..n_objects).map(|_| genus_bag.draw(&mut rng)).collect();
            let eligible: Vec<usize> = (0..n_objects)
                .filter(|&i| object_genera[i] >= 1)
                .collect();
            let linked = if n_objects >= 2
                && eligible.len() >= 2
                && rng.gen::<f64>() < cfg.linked_fraction
            {
                Some((eligible[0], eligible[1]))
            } else {
                None
            };
            let fraction = stage_bag.draw(&mut rng);
            let growth_iterations =
                ((cfg.growth.max_iterations as f64) * fraction).round().max(1.0) as u32;
            scenes.push(ScenePlan {
                scene_id,
                split,
                object_genera,
                linked,
                growth_iterations,
            });
            scene_id += 1;
        }
    }

    let mut warnings = Vec::new();
    for (split, count) in [
        (Split::Train, cfg.counts.train),
        (Split::Val, cfg.counts.val),
        (Split::Test, cfg.counts.test),
    ] {
        let histogram = object_count_histogram(&scenes, split, &object_counts);
        let ideal = count as f64 / object_counts.len() as f64;
        if histogram.iter().any(|&(_, n)| (n as f64 - ideal).abs() > 1.0) {
            warnings.push(format!(
                "split {split:?}: {count} scenes cannot balance object counts evenly; \
                 achieved histogram {histogram:?}"
            ));
        }
    }
    let genus_hist = genus_histogram(&scenes, &genera);
    let total_objects: usize = scenes.iter().map(|s| s.object_genera.len()).sum();
    let ideal = total_objects as f64 / genera.len() as f64;
    if genus_hist.iter().any(|&(_, n)| (n as f64 - ideal).abs() > 1.0) {
        warnings.push(format!(
            "genus histogram off balance: {genus_hist:?} over {total_objects} objects"
        ));
    }
    Ok(DatasetPlan { scenes, warnings })
}

pub fn object_count_histogram(
    scenes: &[ScenePlan],
    split: Split,
    counts: &[usize],
) -> Vec<(usize, usize)> {
    counts
        .iter()
        .map(|&c| {
            (
                c,
                scenes
                    .iter()
                    .filter(|s| s.split == split && s.object_genera.len() == c)
                    .count(),
            )
        })
        .collect()
}

pub fn genus_histogram(scenes: &[ScenePlan], genera: &[u64]) -> Vec<(u64, usize)> {
    genera
        .iter()
        .map(|&g| {
            (
                g,
                scenes
                    .iter()
                    .flat_map(|s| &s.object_genera)
                    .filter(|&&og| og == g)
                    .count(),
            )
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Scene generation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSeeds {
    pub env: u64,
    pub placement: u64,
    pub growth: u64,
    pub sampling: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectManifest {
    pub genus: u64,
    pub linked_partner: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneTopology {
    pub genera: Vec<u64>,
    pub betti: [u64; 3],
    pub chi: i64,
}

impl From<&TopologySummary> for SceneTopology {
    fn from(s: &TopologySummary) -> Self {
        SceneTopology {
            genera: s.components.iter().map(|c| c.genus).collect(),
            betti: [s.scene_betti.0, s.scene_betti.1, s.scene_betti.2],
            chi: s.scene_chi,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneManifest {
    pub scene_id: u64,
    pub split: Split,
    pub status: SceneStatus,
    pub seeds: SceneSeeds,
    pub retries_used: u32,
    pub objects: Vec<ObjectManifest>,
    pub growth_iterations: u32,
    pub mesh_file: String,
    pub cloud_file: String,
    pub topology: Option<SceneTopology>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: DatasetConfig,
    pub scenes: Vec<SceneManifest>,
    pub failed_scenes: usize,
}

const SCENE_RETRIES: u64 = 3;

fn scene_seed(master: u64, stream: Stream, scene_id: u64, retry: u64) -> u64 {
    derive_seed(master, stream, scene_id * 16 + retry)
}

struct GeneratedScene {
    meshes: Vec<TriangleMesh>,
    summary: TopologySummary,
    cloud: LabeledCloud,
    seeds: SceneSeeds,
    retries_used: u32,
}

#[derive(Debug, Error)]
enum SceneError {
    #[error(transparent)]
    Wfc(#[from] WfcError),
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Cloud(#[from] crate::cloud::CloudError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("verification: {0}")]
    Verification(String),
}

/// Normalizes a scene to the target bounding cube centered at the origin;
/// the largest extent spans the cube edge exactly.
pub fn normalize_scene(meshes: &mut [TriangleMesh], target_edge: f64) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for mesh in meshes.iter() {
        if let Some((mlo, mhi)) = mesh.aabb() {
            lo = lo.inf(&mlo);
            hi = hi.sup(&mhi);
        }
    }
    let extent = hi - lo;
    let max_extent = extent.max();
    if !max_extent.is_finite() || max_extent <= 0.0 {
        return;
    }
    let scale = target_edge / max_extent;
    let center = (lo + hi) * 0.5;
    for mesh in meshes.iter_mut() {
        for v in &mut mesh.vertices {
            *v = (*v - center) * scale;
        }
    }
}

fn generate_scene(cfg: &DatasetConfig, plan: &ScenePlan) -> Result<GeneratedScene, SceneError> {
    let mut last_err: Option<SceneError> = None;
    for retry in 0..=SCENE_RETRIES {
        let seeds = SceneSeeds {
            env: scene_seed(cfg.master_seed, Stream::Env, plan.scene_id, retry),
            placement: scene_seed(cfg.master_seed, Stream::Placement, plan.scene_id, retry),
            growth: scene_seed(cfg.master_seed, Stream::Growth, plan.scene_id, retry),
            sampling: scene_seed(cfg.master_seed, Stream::Sampling, plan.scene_id, retry),
        };
        match try_generate(cfg, plan, &seeds) {
            Ok(mut scene) => {
                scene.retries_used = retry as u32;
                return Ok(scene);
            }
            Err(err) => last_err = Some(err),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn try_generate(
    cfg: &DatasetConfig,
    plan: &ScenePlan,
    seeds: &SceneSeeds,
) -> Result<GeneratedScene, SceneError> {
    // Environment.
    let tileset = default_tileset();
    let dims = (cfg.env_dims[0], cfg.env_dims[1], cfg.env_dims[2]);
    let grid = collapse(dims, &tileset, seeds.env, BoundaryRule::Closed)?;
    let env = voxelize(&grid, &tileset, cfg.cell_size);

    // Seeds.
    let mut specs: Vec<SeedSpec> = plan.object_genera.iter().map(|&g| SeedSpec::new(g)).collect();
    if let Some((a, b)) = plan.linked {
        specs[a].linked_to = Some(b);
        specs[b].linked_to = Some(a);
    }
    let placed = place_seeds(&specs, &env, seeds.placement)?;

    // Growth.
    let mut growth_cfg = GrowthConfig::for_meshes(&placed, seeds.growth);
    growth_cfg.w_area = cfg.growth.w_area;
    growth_cfg.w_rep = cfg.growth.w_rep;
    growth_cfg.w_env = cfg.growth.w_env;
    growth_cfg.step_size = cfg.growth.step_size;
    growth_cfg.max_iterations = plan.growth_iterations;
    growth_cfg.remesh_every = cfg.growth.remesh_every;
    growth_cfg.far_field_theta = cfg.growth.far_field_theta;
    if let Some([lo, hi]) = cfg.growth.edge_bounds {
        growth_cfg.edge_min = lo;
        growth_cfg.edge_max = hi;
    }
    let (mut grown, trace) = grow(&placed, &env, &growth_cfg)?;
    if trace.accepted_count() == 0 && plan.growth_iterations > 0 {
        return Err(SceneError::Verification(
            "growth accepted no iterations".into(),
        ));
    }

    // Normalization.
    normalize_scene(&mut grown, cfg.normalization);

    // Verification: exact topology per object, no intersections in the
    // union.
    let summary = scene_summary(&grown)?;
    let expected: Vec<u64> = plan.object_genera.clone();
    let got: Vec<u64> = summary.components.iter().map(|c| c.genus).collect();
    if got != expected {
        return Err(SceneError::Verification(format!(
            "object genera {got:?} do not match plan {expected:?}"
        )));
    }
    let union_refs: Vec<(&TriangleMesh, u32)> =
        grown.iter().enumerate().map(|(i, m)| (m, i as u32)).collect();
    let union = TriangleMesh::union(&union_refs);
    if !detect_self_intersections(&union).is_empty() {
        return Err(SceneError::Verification("final scene intersects".into()));
    }

    // Sampling; every object must appear in the cloud.
    let cloud = sample_cloud(&grown, &plan.object_genera, cfg.points_per_cloud, seeds.sampling)?;
    let mut seen = vec![false; grown.len()];
    for &o in &cloud.object_id {
        seen[o as usize] = true;
    }
    if seen.iter().any(|&s| !s) {
        return Err(SceneError::Verification(
            "an object received no sample points".into(),
        ));
    }

    Ok(GeneratedScene {
        meshes: grown,
        summary,
        cloud,
        seeds: seeds.clone(),
        retries_used: 0,
    })
}

/// Pipeline outcome summary.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineSummary {
    pub scenes_ok: usize,
    pub scenes_failed: usize,
    pub per_split: Vec<(String, usize)>,
    pub manifest_path: PathBuf,
}

/// Runs the full dataset pipeline into `out_dir`, writing
/// `{train,val,test}/scene_<id>.{off,csv}` plus `manifest.json`.
pub fn run_pipeline(cfg: &DatasetConfig, out_dir: &Path) -> Result<PipelineSummary, PipelineError> {
    cfg.validate()?;
    let plan = plan_dataset(cfg)?;
    for split in ["train", "val", "test"] {
        let dir = out_dir.join(split);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    }

    // Generate scenes (parallel across scenes; deterministic per scene).
    let results: Vec<Result<GeneratedScene, SceneError>> =
        map_slots(plan.scenes.len(), true, |i| generate_scene(cfg, &plan.scenes[i]));

    let mut scenes = Vec::with_capacity(plan.scenes.len());
    let mut failed = 0usize;
    for (scene_plan, result) in plan.scenes.iter().zip(results) {
        let rel_mesh = format!(
            "{}/scene_{}.off",
            scene_plan.split.dir_name(),
            scene_plan.scene_id
        );
        let rel_cloud = format!(
            "{}/scene_{}.csv",
            scene_plan.split.dir_name(),
            scene_plan.scene_id
        );
        let objects: Vec<ObjectManifest> = scene_plan
            .object_genera
            .iter()
            .enumerate()
            .map(|(i, &genus)| ObjectManifest {
                genus,
                linked_partner: scene_plan.linked.and_then(|(a, b)| {
                    if i == a {
                        Some(b)
                    } else if i == b {
                        Some(a)
                    } else {
                        None
                    }
                }),
            })
            .collect();
        match result {
            Ok(scene) => {
                let mesh_path = out_dir.join(&rel_mesh);
                let union_refs: Vec<(&TriangleMesh, u32)> = scene
                    .meshes
                    .iter()
                    .enumerate()
                    .map(|(i, m)| (m, i as u32))
                    .collect();
                let union = TriangleMesh::union(&union_refs);
                mesh_io::write_off_file(&union, &mesh_path)?;
                let cloud_path = out_dir.join(&rel_cloud);
                let file = std::fs::File::create(&cloud_path).map_err(io_err(&cloud_path))?;
                write_cloud_csv(&scene.cloud, file)?;
                scenes.push(SceneManifest {
                    scene_id: scene_plan.scene_id,
                    split: scene_plan.split,
                    status: SceneStatus::Ok,
                    seeds: scene.seeds,
                    retries_used: scene.retries_used,
                    objects,
                    growth_iterations: scene_plan.growth_iterations,
                    mesh_file: rel_mesh,
                    cloud_file: rel_cloud,
                    topology: Some(SceneTopology::from(&scene.summary)),
                });
            }
            Err(_) => {
                failed += 1;
                scenes.push(SceneManifest {
                    scene_id: scene_plan.scene_id,
                    split: scene_plan.split,
                    status: SceneStatus::Failed,
                    seeds: SceneSeeds {
                        env: 0,
                        placement: 0,
                        growth: 0,
                        sampling: 0,
                    },
                    retries_used: SCENE_RETRIES as u32,
                    objects,
                    growth_iterations: scene_plan.growth_iterations,
                    mesh_file: rel_mesh,
                    cloud_file: rel_cloud,
                    topology: None,
                });
            }
        }
    }

    let manifest = Manifest {
        config: cfg.clone(),
        scenes,
        failed_scenes: failed,
    };
    let manifest_path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&manifest_path, json).map_err(io_err(&manifest_path))?;

    let per_split = [Split::Train, Split::Val, Split::Test]
        .into_iter()
        .map(|s| {
            (
                s.dir_name().to_string(),
                manifest
                    .scenes
                    .iter()
                    .filter(|m| m.split == s && m.status == SceneStatus::Ok)
                    .count(),
            )
        })
        .collect();
    Ok(PipelineSummary {
        scenes_ok: manifest.scenes.len() - failed,
        scenes_failed: failed,
        per_split,
        manifest_path,
    })
}

pub fn read_manifest(path: &Path) -> Result<Manifest, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SceneVerification {
    pub scene_id: u64,
    pub pass: bool,
    pub details: Vec<String>,
    pub topology: Option<SceneTopology>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub scenes: Vec<SceneVerification>,
    pub passed: usize,
    pub failed: usize,
}

/// Re-verifies every stored scene from disk: recomputes the topology oracle
/// on the mesh file and cross-checks the cloud labels against the manifest.
pub fn verify_dataset(manifest: &Manifest, root: &Path) -> Result<VerifyReport, PipelineError> {
    let mut scenes = Vec::with_capacity(manifest.scenes.len());
    for scene in &manifest.scenes {
        let mut details = Vec::new();
        let mut pass = true;
        let mut topology = None;
        if scene.status != SceneStatus::Ok {
            details.push("scene recorded as failed at generation time".into());
            pass = false;
        } else {
            let mesh_path = root.join(&scene.mesh_file);
            if !mesh_path.exists() {
                return Err(PipelineError::MissingFile(mesh_path));
            }
            let union = mesh_io::read_mesh_file(&mesh_path)?;
            let components = union.connected_components();
            match scene_summary(&components) {
                Ok(summary) => {
                    let fresh = SceneTopology::from(&summary);
                    let expected: Vec<u64> = scene.objects.iter().map(|o| o.genus).collect();
                    if fresh.genera != expected {
                        pass = false;
                        details.push(format!(
                            "mesh genera {:?} != manifest {:?}",
                            fresh.genera, expected
                        ));
                    }
                    if let Some(stored) = &scene.topology {
                        if stored.betti != fresh.betti || stored.chi != fresh.chi {
                            pass = false;
                            details.push(format!(
                                "stored betti/chi {:?}/{} != recomputed {:?}/{}",
                                stored.betti, stored.chi, fresh.betti, fresh.chi
                            ));
                        }
                    }
                    topology = Some(fresh);
                }
                Err(err) => {
                    pass = false;
                    details.push(format!("oracle failure: {err}"));
                }
            }
            let cloud_path = root.join(&scene.cloud_file);
            if !cloud_path.exists() {
                return Err(PipelineError::MissingFile(cloud_path));
            }
            let file = std::fs::File::open(&cloud_path).map_err(io_err(&cloud_path))?;
            let cloud = read_cloud_csv(file)?;
            if cloud.len() != manifest.config.points_per_cloud {
                pass = false;
                details.push(format!(
                    "cloud has {} points, expected {}",
                    cloud.len(),
                    manifest.config.points_per_cloud
                ));
            }
            // The multiset of per-object genus labels in the cloud must
            // match the manifest.
            let mut cloud_genera: Vec<u64> = cloud
                .label_pairs()
                .iter()
                .map(|&(_, g)| g as u64)
                .collect();
            cloud_genera.sort_unstable();
            let mut expected: Vec<u64> = scene.objects.iter().map(|o| o.genus).collect();
            expected.sort_unstable();
            if cloud_genera != expected {
                pass = false;
                details.push(format!(
                    "cloud genus multiset {cloud_genera:?} != manifest {expected:?}"
                ));
            }
        }
        scenes.push(SceneVerification {
            scene_id: scene.scene_id,
            pass,
            details,
            topology,
        });
    }
    let passed = scenes.iter().filter(|s| s.pass).count();
    let failed = scenes.len() - passed;
    Ok(VerifyReport {
        scenes,
        passed,
        failed,
    })
}

// ---------------------------------------------------------------------------
// Evaluation glue
// ---------------------------------------------------------------------------

/// Scores predictions against a dataset: for each ok scene, reads the cloud
/// CSV's genus column and `<pred_dir>/scene_<id>.pred` (one label per line),
/// then aggregates.
pub fn evaluate_dataset(
    manifest: &Manifest,
    root: &Path,
    pred_dir: &Path,
    mode: Aggregation,
) -> Result<MetricsReport, PipelineError> {
    let k = (manifest.config.genus_range[1] + 1) as usize;
    let mut matrices = Vec::new();
    for scene in &manifest.scenes {
        if scene.status != SceneStatus::Ok {
            continue;
        }
        let cloud_path = root.join(&scene.cloud_file);
        let file = std::fs::File::open(&cloud_path).map_err(io_err(&cloud_path))?;
        let cloud = read_cloud_csv(file)?;
        let pred_path = pred_dir.join(format!("scene_{}.pred", scene.scene_id));
        if !pred_path.exists() {
            return Err(PipelineError::MissingFile(pred_path));
        }
        let pred_file = std::fs::File::open(&pred_path).map_err(io_err(&pred_path))?;
        let pred = crate::cloud::read_predictions(pred_file)?;
        let mut cm = ConfusionMatrix::new(k);
        cm.accumulate(&cloud.genus_label, &pred)?;
        matrices.push(cm);
    }
    Ok(crate::metrics::aggregate(&matrices, mode)?)
}

/// Directory-mode evaluation: every `*.csv` in `clouds_dir` is a cloud whose
/// predictions live at `<pred_dir>/<stem>.pred`.
pub fn evaluate_cloud_dir(
    clouds_dir: &Path,
    pred_dir: &Path,
    classes: usize,
    mode: Aggregation,
) -> Result<MetricsReport, PipelineError> {
    let mut cloud_files: Vec<PathBuf> = std::fs::read_dir(clouds_dir)
        .map_err(io_err(clouds_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("csv"))
        .collect();
    cloud_files.sort();
    let mut matrices = Vec::new();
    for cloud_path in cloud_files {
        let file = std::fs::File::open(&cloud_path).map_err(io_err(&cloud_path))?;
        let cloud = read_cloud_csv(file)?;
        let stem = cloud_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let pred_path = pred_dir.join(format!("{stem}.pred"));
        if !pred_path.exists() {
            return Err(PipelineError::MissingFile(pred_path));
        }
        let pred_file = std::fs::File::open(&pred_path).map_err(io_err(&pred_path))?;
        let pred = crate::cloud::read_predictions(pred_file)?;
        let mut cm = ConfusionMatrix::new(classes);
        cm.accumulate(&cloud.genus_label, &pred)?;
        matrices.push(cm);
    }
    Ok(crate::metrics::aggregate(&matrices, mode)?)
}
