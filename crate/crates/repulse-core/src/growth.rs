//! Repulsive surface growth.
//!
//! Meshes grow by descending `F = w_rep * E_tp - w_area * Area + w_env * P_env`
//! where `E_tp` is a tangent-point repulsive energy over all vertex pairs of
//! the scene union (so different objects repel each other too) and `P_env`
//! penalizes penetration into occupied environment cells. The energy blows up
//! on近 contact which already acts as a collision barrier; on top of it every
//! step is checked for self- and cross-intersections and rolled back (step
//! halved) if any appear, which makes genus preservation unconditional rather
//! than probabilistic.
//!
//! The discrete energy is
//!
//! ```text
//! E = sum over ordered pairs i != j of
//!       A_i A_j (n_i . (x_i - x_j))^2 / |x_i - x_j|^6
//! ```
//!
//! with `A_i` one third of the incident triangle area and `n_i` the
//! normalized area-weighted vertex normal. The (2, 6) exponents make `E`
//! scale invariant. The gradient is fully analytic: pair terms are
//! accumulated per vertex, then backpropagated through vertex areas and
//! normals to positions via the triangle area vectors.
//!
//! All kernels run in parallel under the `parallel` feature with fixed
//! reduction order, so results are bit-identical across thread counts.

use crate::mesh::{
    detect_self_intersections, edge_collapse, edge_split, TriangleMesh, Vec3, DEGENERATE_SQ_AREA,
};
use crate::rng::{rng_for, Stream};
use crate::wfc::OccupancyGrid;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

/// Distance clamp of the pair kernel, per the energy definition.
const PAIR_DISTANCE_CLAMP: f64 = 1e-9;
/// Accepted steps may not increase the objective by more than this.
const DESCENT_SLACK: f64 = 1e-9;
/// Most step halvings tried within one iteration before recording a reject.
const MAX_HALVINGS: u32 = 8;

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("invalid growth config: {0}")]
    Config(String),
    #[error("growth input violates preconditions: {0}")]
    Precondition(String),
}

/// Growth parameters. `edge_min`/`edge_max` are the remeshing bounds in scene
/// units; [`GrowthConfig::for_meshes`] derives them from the seed meshes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthConfig {
    pub w_area: f64,
    pub w_rep: f64,
    pub w_env: f64,
    pub step_size: f64,
    pub max_iterations: u32,
    pub remesh_every: u32,
    pub edge_min: f64,
    pub edge_max: f64,
    pub rng_seed: u64,
    /// Barnes-Hut style far-field acceleration with the given opening angle
    /// (must be < 1). `None` evaluates the exact O(V^2) kernel.
    pub far_field_theta: Option<f64>,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            w_area: 1.0,
            w_rep: 0.5,
            w_env: 20.0,
            step_size: 0.2,
            max_iterations: 100,
            remesh_every: 10,
            edge_min: 0.5,
            edge_max: 2.0,
            rng_seed: 0,
            far_field_theta: None,
        }
    }
}

impl GrowthConfig {
    /// Default config with remeshing bounds (0.5, 2.0) x mean seed edge
    /// length.
    pub fn for_meshes(meshes: &[TriangleMesh], rng_seed: u64) -> Self {
        let refs: Vec<(&TriangleMesh, u32)> =
            meshes.iter().enumerate().map(|(i, m)| (m, i as u32)).collect();
        let mean = TriangleMesh::union(&refs).mean_edge_length();
        GrowthConfig {
            edge_min: 0.5 * mean,
            edge_max: 2.0 * mean,
            rng_seed,
            ..GrowthConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), GrowthError> {
        let bounds_ok =
            self.edge_min.is_finite() && self.edge_max.is_finite() && self.edge_min < self.edge_max;
        if !bounds_ok {
            return Err(GrowthError::Config(format!(
                "edge_min {} must be < edge_max {}",
                self.edge_min, self.edge_max
            )));
        }
        if self.w_area == 0.0 && self.w_rep == 0.0 && self.w_env == 0.0 {
            return Err(GrowthError::Config("weights must not all be zero".into()));
        }
        if self.w_area < 0.0 || self.w_rep < 0.0 || self.w_env < 0.0 {
            return Err(GrowthError::Config("weights must be non-negative".into()));
        }
        if self.step_size <= 0.0 {
            return Err(GrowthError::Config("step_size must be positive".into()));
        }
        if let Some(theta) = self.far_field_theta {
            if !(0.0 < theta && theta < 1.0) {
                return Err(GrowthError::Config(format!(
                    "far_field_theta {theta} must be in (0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Per-iteration record of one growth run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: u32,
    pub area: f64,
    pub repulsive_energy: f64,
    pub chi: i64,
    pub component_count: usize,
    pub accepted: bool,
}

/// Trace of a whole run. `chi` and `component_count` must be constant across
/// the records of one run; tests and the verification pipeline rely on it.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GrowthTrace {
    pub records: Vec<IterationRecord>,
}

impl GrowthTrace {
    pub fn accepted_count(&self) -> usize {
        self.records.iter().filter(|r| r.accepted).count()
    }

    /// CSV export: `iteration,area,energy,chi,components,accepted`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,area,energy,chi,components,accepted")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.9e},{:.9e},{},{},{}",
                r.iteration, r.area, r.repulsive_energy, r.chi, r.component_count, r.accepted
            )?;
        }
        Ok(())
    }
}

use crate::par::map_slots;

// ---------------------------------------------------------------------------
// Vertex data
// ---------------------------------------------------------------------------

struct VertexData {
    /// One third of incident triangle area.
    area: Vec<f64>,
    /// Unit vertex normal (area-weighted incident triangle average).
    normal: Vec<Vec3>,
    /// Norm of the unnormalized normal, for backpropagation.
    big_n_norm: Vec<f64>,
    /// Incident triangle list per vertex.
    incident: Vec<Vec<usize>>,
}

fn vertex_data(mesh: &TriangleMesh) -> VertexData {
    let nv = mesh.vertex_count();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            incident[v].push(t);
        }
    }
    let area_vectors: Vec<Vec3> = (0..mesh.triangle_count())
        .map(|t| mesh.area_vector(t))
        .collect();
    let mut area = vec![0.0; nv];
    let mut normal = vec![Vec3::zeros(); nv];
    let mut big_n_norm = vec![0.0; nv];
    for v in 0..nv {
        let mut big_n = Vec3::zeros();
        let mut a = 0.0;
        for &t in &incident[v] {
            big_n += area_vectors[t];
            a += area_vectors[t].norm();
        }
        area[v] = a / 3.0;
        let norm = big_n.norm();
        big_n_norm[v] = norm;
        normal[v] = if norm > 0.0 { big_n / norm } else { Vec3::zeros() };
    }
    VertexData {
        area,
        normal,
        big_n_norm,
        incident,
    }
}

// ---------------------------------------------------------------------------
// Tangent-point energy
// ---------------------------------------------------------------------------

fn pair_kernel(s: f64, d: f64) -> f64 {
    let d2 = d * d;
    let d6 = d2 * d2 * d2;
    s * s / d6
}

/// Energy contribution of observer `i` against all other vertices, exact.
fn observer_energy(i: usize, x: &[Vec3], data: &VertexData) -> f64 {
    let xi = x[i];
    let ni = data.normal[i];
    let ai = data.area[i];
    let mut sum = 0.0;
    for j in 0..x.len() {
        if j == i {
            continue;
        }
        let r = xi - x[j];
        let d = r.norm().max(PAIR_DISTANCE_CLAMP);
        let s = ni.dot(&r);
        sum += data.area[j] * pair_kernel(s, d);
    }
    ai * sum
}

fn energy_impl(mesh: &TriangleMesh, parallel: bool, theta: Option<f64>) -> f64 {
    let data = vertex_data(mesh);
    let x = &mesh.vertices;
    let per_vertex: Vec<f64> = match theta {
        None => map_slots(x.len(), parallel, |i| observer_energy(i, x, &data)),
        Some(theta) => {
            let tree = Octree::build(x, &data.area);
            map_slots(x.len(), parallel, |i| {
                tree.observer_energy(i, x, &data, theta)
            })
        }
    };
    per_vertex.iter().sum()
}

/// Tangent-point energy of the whole mesh (exact O(V^2) kernel).
pub fn tangent_point_energy(mesh: &TriangleMesh) -> f64 {
    energy_impl(mesh, true, None)
}

/// Sequential variant of [`tangent_point_energy`]; same result.
pub fn tangent_point_energy_seq(mesh: &TriangleMesh) -> f64 {
    energy_impl(mesh, false, None)
}

/// Far-field-accelerated energy, for the optional growth accelerator.
pub fn tangent_point_energy_accel(mesh: &TriangleMesh, theta: f64) -> f64 {
    energy_impl(mesh, true, Some(theta))
}

// ---------------------------------------------------------------------------
// Environment penetration field
// ---------------------------------------------------------------------------

/// Penetration depth (scene units) into the occupied region, sampled at cell
/// centers and interpolated trilinearly. Depth is 0 in free space and grows
/// toward the inside of barrier cells.
pub struct PenetrationField {
    dims: (usize, usize, usize),
    cell_size: f64,
    depth: Vec<f64>,
    any_occupied: bool,
}

/// 1D squared Euclidean distance transform (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let sq = |a: usize| (a * a) as f64;
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + sq(q)) - (f[p] + sq(p))) / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] {
                if k == 0 {
                    break;
                }
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        out[q] = dq * dq + f[p];
    }
}

impl PenetrationField {
    pub fn from_env(env: &OccupancyGrid) -> Self {
        let (nx, ny, nz) = env.dims;
        let n = nx * ny * nz;
        let any_occupied = env.occupied.iter().any(|&b| b);
        let mut depth = vec![0.0; n];
        if any_occupied {
            // Squared distance (in cells) to the nearest free cell center.
            const FAR: f64 = 1e18;
            let mut d: Vec<f64> = env
                .occupied
                .iter()
                .map(|&occ| if occ { FAR } else { 0.0 })
                .collect();
            // Separable passes along x, y, z.
            let idx = |x: usize, y: usize, z: usize| x + nx * (y + ny * z);
            let mut line: Vec<f64> = Vec::new();
            let mut out_line: Vec<f64> = Vec::new();
            for z in 0..nz {
                for y in 0..ny {
                    line.clear();
                    line.extend((0..nx).map(|x| d[idx(x, y, z)]));
                    out_line.resize(nx, 0.0);
                    edt_1d(&line, &mut out_line);
                    for x in 0..nx {
                        d[idx(x, y, z)] = out_line[x];
                    }
                }
            }
            for z in 0..nz {
                for x in 0..nx {
                    line.clear();
                    line.extend((0..ny).map(|y| d[idx(x, y, z)]));
                    out_line.resize(ny, 0.0);
                    edt_1d(&line, &mut out_line);
                    for y in 0..ny {
                        d[idx(x, y, z)] = out_line[y];
                    }
                }
            }
            for y in 0..ny {
                for x in 0..nx {
                    line.clear();
                    line.extend((0..nz).map(|z| d[idx(x, y, z)]));
                    out_line.resize(nz, 0.0);
                    edt_1d(&line, &mut out_line);
                    for z in 0..nz {
                        d[idx(x, y, z)] = out_line[z];
                    }
                }
            }
            for i in 0..n {
                // Center of a boundary barrier cell sits half a cell inside.
                depth[i] = (d[i].sqrt() - 0.5).max(0.0) * env.cell_size;
            }
        }
        PenetrationField {
            dims: env.dims,
            cell_size: env.cell_size,
            depth,
            any_occupied,
        }
    }

    /// An always-zero field (no environment).
    pub fn free() -> Self {
        PenetrationField {
            dims: (1, 1, 1),
            cell_size: 1.0,
            depth: vec![0.0],
            any_occupied: false,
        }
    }

    pub fn is_free(&self) -> bool {
        !self.any_occupied
    }

    /// Depth and its spatial gradient at `p` (trilinear between cell
    /// centers, clamped at the grid rim where depth is zero anyway).
    pub fn sample(&self, p: Vec3) -> (f64, Vec3) {
        if !self.any_occupied {
            return (0.0, Vec3::zeros());
        }
        let (nx, ny, nz) = self.dims;
        let grid = |v: f64, n: usize| -> (usize, f64) {
            let u = v / self.cell_size - 0.5;
            if n == 1 {
                return (0, 0.0);
            }
            let max = (n - 2) as f64;
            let clamped = u.clamp(0.0, max + 1.0 - 1e-12);
            let i = (clamped.floor() as usize).min(n - 2);
            (i, clamped - i as f64)
        };
        let (i, fx) = grid(p.x, nx);
        let (j, fy) = grid(p.y, ny);
        let (k, fz) = grid(p.z, nz);
        let at = |dx: usize, dy: usize, dz: usize| {
            self.depth[(i + dx) + nx * ((j + dy) + ny * (k + dz))]
        };
        let (c000, c100, c010, c110) = (at(0, 0, 0), at(1, 0, 0), at(0, 1, 0), at(1, 1, 0));
        let (c001, c101, c011, c111) = (at(0, 0, 1), at(1, 0, 1), at(0, 1, 1), at(1, 1, 1));
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let c00 = lerp(c000, c100, fx);
        let c10 = lerp(c010, c110, fx);
        let c01 = lerp(c001, c101, fx);
        let c11 = lerp(c011, c111, fx);
        let c0 = lerp(c00, c10, fy);
        let c1 = lerp(c01, c11, fy);
        let value = lerp(c0, c1, fz);
        // Partial derivatives of the trilinear form, then to scene units.
        let dx = lerp(
            lerp(c100 - c000, c110 - c010, fy),
            lerp(c101 - c001, c111 - c011, fy),
            fz,
        );
        let dy = lerp(lerp(c010 - c000, c110 - c100, fx), lerp(c011 - c001, c111 - c101, fx), fz);
        let dz = lerp(lerp(c001 - c000, c101 - c100, fx), lerp(c011 - c010, c111 - c110, fx), fy);
        (
            value,
            Vec3::new(dx, dy, dz) / self.cell_size,
        )
    }
}

// ---------------------------------------------------------------------------
// Objective and analytic gradient
// ---------------------------------------------------------------------------

/// Objective value split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub total: f64,
    pub repulsive: f64,
    pub area: f64,
    pub env_penalty: f64,
}

fn objective_impl(
    mesh: &TriangleMesh,
    field: &PenetrationField,
    cfg: &GrowthConfig,
    parallel: bool,
) -> Objective {
    let repulsive = energy_impl(mesh, parallel, cfg.far_field_theta);
    let area = mesh.surface_area();
    let env_penalty = if field.is_free() || cfg.w_env == 0.0 {
        0.0
    } else {
        let data = vertex_data(mesh);
        let per: Vec<f64> = map_slots(mesh.vertex_count(), parallel, |i| {
            let (depth, _) = field.sample(mesh.vertices[i]);
            data.area[i] * depth.max(0.0) * depth.max(0.0)
        });
        per.iter().sum()
    };
    Objective {
        total: cfg.w_rep * repulsive - cfg.w_area * area + cfg.w_env * env_penalty,
        repulsive,
        area,
        env_penalty,
    }
}

/// Objective `F = w_rep E - w_area Area + w_env P` for a scene union.
pub fn growth_objective(
    mesh: &TriangleMesh,
    env: &OccupancyGrid,
    cfg: &GrowthConfig,
) -> Objective {
    objective_impl(mesh, &PenetrationField::from_env(env), cfg, true)
}

/// Pair-stage adjoints for one vertex slot.
#[derive(Clone, Copy)]
struct PairAdjoint {
    x_bar: Vec3,
    n_bar: Vec3,
    a_bar: f64,
}

/// Both-roles pair scan for vertex `k`: accumulates the adjoints of every
/// ordered pair where `k` is the observer (owning the normal) or the target.
/// Doing both roles per slot keeps the parallel reduction race-free and
/// deterministic.
fn pair_adjoint_exact(k: usize, x: &[Vec3], data: &VertexData) -> PairAdjoint {
    let mut x_bar = Vec3::zeros();
    let mut n_bar = Vec3::zeros();
    let mut a_bar = 0.0;
    let (xk, nk, ak) = (x[k], data.normal[k], data.area[k]);
    for j in 0..x.len() {
        if j == k {
            continue;
        }
        // Role 1: k observes j.
        {
            let r = xk - x[j];
            let len = r.norm();
            let d = len.max(PAIR_DISTANCE_CLAMP);
            let s = nk.dot(&r);
            let d2 = d * d;
            let d6 = d2 * d2 * d2;
            let k_val = s * s / d6;
            a_bar += data.area[j] * k_val;
            let coeff = ak * data.area[j];
            n_bar += r * (coeff * 2.0 * s / d6);
            let mut dr = nk * (coeff * 2.0 * s / d6);
            if len > PAIR_DISTANCE_CLAMP {
                dr -= r * (coeff * 6.0 * s * s / (d6 * d2));
            }
            x_bar += dr;
        }
        // Role 2: j observes k.
        {
            let r = x[j] - xk;
            let len = r.norm();
            let d = len.max(PAIR_DISTANCE_CLAMP);
            let s = data.normal[j].dot(&r);
            let d2 = d * d;
            let d6 = d2 * d2 * d2;
            let k_val = s * s / d6;
            a_bar += data.area[j] * k_val;
            let coeff = data.area[j] * ak;
            let mut dr = data.normal[j] * (coeff * 2.0 * s / d6);
            if len > PAIR_DISTANCE_CLAMP {
                dr -= r * (coeff * 6.0 * s * s / (d6 * d2));
            }
            x_bar -= dr;
        }
    }
    PairAdjoint {
        x_bar,
        n_bar,
        a_bar,
    }
}

fn gradient_impl(
    mesh: &TriangleMesh,
    field: &PenetrationField,
    cfg: &GrowthConfig,
    parallel: bool,
) -> Vec<Vec3> {
    let data = vertex_data(mesh);
    let x = &mesh.vertices;
    let nv = x.len();

    // Pair stage: dE/dx (direct part), dE/dn, dE/dA.
    let pair: Vec<PairAdjoint> = match cfg.far_field_theta {
        None => {
            if cfg.w_rep == 0.0 {
                vec![
                    PairAdjoint {
                        x_bar: Vec3::zeros(),
                        n_bar: Vec3::zeros(),
                        a_bar: 0.0,
                    };
                    nv
                ]
            } else {
                map_slots(nv, parallel, |k| pair_adjoint_exact(k, x, &data))
            }
        }
        Some(theta) => {
            if cfg.w_rep == 0.0 {
                vec![
                    PairAdjoint {
                        x_bar: Vec3::zeros(),
                        n_bar: Vec3::zeros(),
                        a_bar: 0.0,
                    };
                    nv
                ]
            } else {
                let tree = Octree::build(x, &data.area);
                tree.pair_adjoints(x, &data, theta, parallel)
            }
        }
    };

    // Environment stage: dP/dx (direct) and dP/dA.
    let env_terms: Vec<(Vec3, f64)> = if field.is_free() || cfg.w_env == 0.0 {
        vec![(Vec3::zeros(), 0.0); nv]
    } else {
        map_slots(nv, parallel, |i| {
            let (depth, grad) = field.sample(x[i]);
            let depth = depth.max(0.0);
            (grad * (data.area[i] * 2.0 * depth), depth * depth)
        })
    };

    // Triangle stage: area-vector adjoints from the total dF/d(area_t) and
    // the normal backprop, then scatter to vertices by per-vertex gather.
    let av_bars: Vec<Vec3> = map_slots(mesh.triangle_count(), parallel, |t| {
        let tri = mesh.triangles[t];
        let av = mesh.area_vector(t);
        let a_norm = av.norm();
        // dF/d(area_t): energy + env through vertex areas, minus the area
        // reward.
        let mut area_adj = -cfg.w_area;
        for &v in &tri {
            area_adj += (cfg.w_rep * pair[v].a_bar + cfg.w_env * env_terms[v].1) / 3.0;
        }
        let mut av_bar = if a_norm > 0.0 {
            av * (area_adj / a_norm)
        } else {
            Vec3::zeros()
        };
        // Normal backprop: n = N/|N| with N the sum of incident area
        // vectors; dE/dN = (I - n n^T) dE/dn / |N|.
        for &v in &tri {
            if data.big_n_norm[v] > 0.0 {
                let nb = pair[v].n_bar * cfg.w_rep;
                let n = data.normal[v];
                av_bar += (nb - n * nb.dot(&n)) / data.big_n_norm[v];
            }
        }
        av_bar
    });

    // Gather per vertex: direct terms plus triangle contributions.
    map_slots(nv, parallel, |v| {
        let mut g = pair[v].x_bar * cfg.w_rep + env_terms[v].0 * cfg.w_env;
        for &t in &data.incident[v] {
            let tri = mesh.triangles[t];
            let w = av_bars[t];
            let (a, b, c) = (x[tri[0]], x[tri[1]], x[tri[2]]);
            let (u_vec, v_vec) = (b - a, c - a);
            // d(0.5 u x v) . w: du -> 0.5 v x w, dv -> 0.5 w x u.
            if tri[0] == v {
                g -= (v_vec.cross(&w) + w.cross(&u_vec)) * 0.5;
            } else if tri[1] == v {
                g += v_vec.cross(&w) * 0.5;
            } else {
                g += w.cross(&u_vec) * 0.5;
            }
        }
        g
    })
}

/// Analytic gradient of the growth objective with respect to every vertex.
pub fn growth_gradient(mesh: &TriangleMesh, env: &OccupancyGrid, cfg: &GrowthConfig) -> Vec<Vec3> {
    gradient_impl(mesh, &PenetrationField::from_env(env), cfg, true)
}

/// Sequential variant of [`growth_gradient`]; same result.
pub fn growth_gradient_seq(
    mesh: &TriangleMesh,
    env: &OccupancyGrid,
    cfg: &GrowthConfig,
) -> Vec<Vec3> {
    gradient_impl(mesh, &PenetrationField::from_env(env), cfg, false)
}

// ---------------------------------------------------------------------------
// Barnes-Hut octree for the far field
// ---------------------------------------------------------------------------

struct OctreeNode {
    half: f64,
    /// Area-weighted centroid and total weight of contained vertices.
    centroid: Vec3,
    weight: f64,
    children: Option<[usize; 8]>,
    /// Vertex indices for leaves.
    items: Vec<usize>,
    parent: Option<usize>,
}

struct Octree {
    nodes: Vec<OctreeNode>,
    root: usize,
    /// Leaf node of every vertex.
    leaf_of: Vec<usize>,
}

const OCTREE_LEAF: usize = 8;
const OCTREE_MAX_DEPTH: u32 = 24;

impl Octree {
    fn build(x: &[Vec3], area: &[f64]) -> Octree {
        let mut lo = x[0];
        let mut hi = x[0];
        for p in x.iter().skip(1) {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let center = (lo + hi) * 0.5;
        let half = ((hi - lo).max() * 0.5 + 1e-12).max(1e-12);
        let mut tree = Octree {
            nodes: Vec::new(),
            root: 0,
            leaf_of: vec![0; x.len()],
        };
        let all: Vec<usize> = (0..x.len()).collect();
        tree.root = tree.build_node(center, half, all, None, 0, x, area);
        tree
    }

    #[allow(clippy::too_many_arguments)]
    fn build_node(
        &mut self,
        center: Vec3,
        half: f64,
        items: Vec<usize>,
        parent: Option<usize>,
        depth: u32,
        x: &[Vec3],
        area: &[f64],
    ) -> usize {
        let mut weight = 0.0;
        let mut first_moment = Vec3::zeros();
        for &i in &items {
            weight += area[i];
            first_moment += x[i] * area[i];
        }
        let centroid = if weight > 0.0 {
            first_moment / weight
        } else {
            center
        };
        let id = self.nodes.len();
        self.nodes.push(OctreeNode {
            half,
            centroid,
            weight,
            children: None,
            items: Vec::new(),
            parent,
        });
        if items.len() <= OCTREE_LEAF || depth >= OCTREE_MAX_DEPTH {
            for &i in &items {
                self.leaf_of[i] = id;
            }
            self.nodes[id].items = items;
            return id;
        }
        let mut buckets: [Vec<usize>; 8] = Default::default();
        for &i in &items {
            let mut oct = 0usize;
            if x[i].x >= center.x {
                oct |= 1;
            }
            if x[i].y >= center.y {
                oct |= 2;
            }
            if x[i].z >= center.z {
                oct |= 4;
            }
            buckets[oct].push(i);
        }
        let mut children = [usize::MAX; 8];
        let quarter = half * 0.5;
        for (oct, bucket) in buckets.into_iter().enumerate() {
            let offset = Vec3::new(
                if oct & 1 != 0 { quarter } else { -quarter },
                if oct & 2 != 0 { quarter } else { -quarter },
                if oct & 4 != 0 { quarter } else { -quarter },
            );
            children[oct] =
                self.build_node(center + offset, quarter, bucket, Some(id), depth + 1, x, area);
        }
        self.nodes[id].children = Some(children);
        id
    }

    /// True when the node is far enough to use its aggregate. Distance is
    /// measured to the node's bounding sphere, not its centroid, which keeps
    /// the gradient (with its higher-order 1/d terms) within tolerance.
    fn accepts(&self, node: &OctreeNode, from: Vec3, theta: f64) -> bool {
        let radius = node.half * 3.0f64.sqrt();
        let dist = (node.centroid - from).norm() - radius;
        dist > 0.0 && (2.0 * node.half) / dist < theta
    }

    fn observer_energy(&self, i: usize, x: &[Vec3], data: &VertexData, theta: f64) -> f64 {
        let mut sum = 0.0;
        let (xi, ni) = (x[i], data.normal[i]);
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.weight == 0.0 {
                continue;
            }
            match node.children {
                Some(children) if !self.accepts(node, xi, theta) => {
                    for c in children {
                        stack.push(c);
                    }
                }
                Some(_) => {
                    let r = xi - node.centroid;
                    let d = r.norm().max(PAIR_DISTANCE_CLAMP);
                    let s = ni.dot(&r);
                    sum += node.weight * pair_kernel(s, d);
                }
                None => {
                    for &j in &node.items {
                        if j == i {
                            continue;
                        }
                        let r = xi - x[j];
                        let d = r.norm().max(PAIR_DISTANCE_CLAMP);
                        let s = ni.dot(&r);
                        sum += data.area[j] * pair_kernel(s, d);
                    }
                }
            }
        }
        data.area[i] * sum
    }

    /// Full pair-stage adjoints with far-field approximation. Cluster-side
    /// adjoints accumulate at nodes (chunked, fixed reduction order) and then
    /// distribute down each vertex's ancestor chain.
    fn pair_adjoints(
        &self,
        x: &[Vec3],
        data: &VertexData,
        theta: f64,
        parallel: bool,
    ) -> Vec<PairAdjoint> {
        let nv = x.len();
        let n_nodes = self.nodes.len();
        const CHUNKS: usize = 16;
        let chunk_len = nv.div_ceil(CHUNKS);
        // Per chunk: local vertex adjoints + local node adjoints
        // (weight_bar, centroid_bar).
        struct ChunkOut {
            pair: Vec<PairAdjoint>,
            node_w: Vec<f64>,
            node_c: Vec<Vec3>,
        }
        let chunk_results: Vec<ChunkOut> = map_slots(
            nv.div_ceil(chunk_len.max(1)),
            parallel,
            |chunk_idx| {
                let start = chunk_idx * chunk_len;
                let end = (start + chunk_len).min(nv);
                let zero = PairAdjoint {
                    x_bar: Vec3::zeros(),
                    n_bar: Vec3::zeros(),
                    a_bar: 0.0,
                };
                let mut out = ChunkOut {
                    pair: vec![zero; nv],
                    node_w: vec![0.0; n_nodes],
                    node_c: vec![Vec3::zeros(); n_nodes],
                };
                for i in start..end {
                    self.observer_adjoint(i, x, data, theta, &mut out.pair, &mut out.node_w, &mut out.node_c);
                }
                out
            },
        );
        // Fixed-order reduction.
        let zero = PairAdjoint {
            x_bar: Vec3::zeros(),
            n_bar: Vec3::zeros(),
            a_bar: 0.0,
        };
        let mut pair = vec![zero; nv];
        let mut node_w = vec![0.0; n_nodes];
        let mut node_c = vec![Vec3::zeros(); n_nodes];
        for chunk in &chunk_results {
            for v in 0..nv {
                pair[v].x_bar += chunk.pair[v].x_bar;
                pair[v].n_bar += chunk.pair[v].n_bar;
                pair[v].a_bar += chunk.pair[v].a_bar;
            }
            for n in 0..n_nodes {
                node_w[n] += chunk.node_w[n];
                node_c[n] += chunk.node_c[n];
            }
        }
        // Distribute node adjoints down each vertex's ancestor chain:
        // W = sum A_j, c = sum A_j x_j / W.
        let distributed: Vec<(Vec3, f64)> = map_slots(nv, parallel, |j| {
            let mut x_extra = Vec3::zeros();
            let mut a_extra = 0.0;
            let mut cursor = Some(self.leaf_of[j]);
            while let Some(id) = cursor {
                let node = &self.nodes[id];
                if node.weight > 0.0 && (node_w[id] != 0.0 || node_c[id] != Vec3::zeros()) {
                    a_extra += node_w[id];
                    a_extra += node_c[id].dot(&(x[j] - node.centroid)) / node.weight;
                    x_extra += node_c[id] * (data.area[j] / node.weight);
                }
                cursor = node.parent;
            }
            (x_extra, a_extra)
        });
        for v in 0..nv {
            pair[v].x_bar += distributed[v].0;
            pair[v].a_bar += distributed[v].1;
        }
        pair
    }

    #[allow(clippy::too_many_arguments)]
    fn observer_adjoint(
        &self,
        i: usize,
        x: &[Vec3],
        data: &VertexData,
        theta: f64,
        pair: &mut [PairAdjoint],
        node_w: &mut [f64],
        node_c: &mut [Vec3],
    ) {
        let (xi, ni, ai) = (x[i], data.normal[i], data.area[i]);
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.weight == 0.0 {
                continue;
            }
            match node.children {
                Some(children) if !self.accepts(node, xi, theta) => {
                    for c in children {
                        stack.push(c);
                    }
                }
                Some(_) => {
                    // Cluster term f = A_i W (n_i . r)^2 / d^6, r = x_i - c.
                    let r = xi - node.centroid;
                    let len = r.norm();
                    let d = len.max(PAIR_DISTANCE_CLAMP);
                    let s = ni.dot(&r);
                    let d2 = d * d;
                    let d6 = d2 * d2 * d2;
                    let k_val = s * s / d6;
                    pair[i].a_bar += node.weight * k_val;
                    let coeff = ai * node.weight;
                    pair[i].n_bar += r * (coeff * 2.0 * s / d6);
                    let mut dr = ni * (coeff * 2.0 * s / d6);
                    if len > PAIR_DISTANCE_CLAMP {
                        dr -= r * (coeff * 6.0 * s * s / (d6 * d2));
                    }
                    pair[i].x_bar += dr;
                    node_w[id] += ai * k_val;
                    node_c[id] -= dr;
                }
                None => {
                    for &j in &node.items {
                        if j == i {
                            continue;
                        }
                        let r = xi - x[j];
                        let len = r.norm();
                        let d = len.max(PAIR_DISTANCE_CLAMP);
                        let s = ni.dot(&r);
                        let d2 = d * d;
                        let d6 = d2 * d2 * d2;
                        let k_val = s * s / d6;
                        pair[i].a_bar += data.area[j] * k_val;
                        pair[j].a_bar += ai * k_val;
                        let coeff = ai * data.area[j];
                        pair[i].n_bar += r * (coeff * 2.0 * s / d6);
                        let mut dr = ni * (coeff * 2.0 * s / d6);
                        if len > PAIR_DISTANCE_CLAMP {
                            dr -= r * (coeff * 6.0 * s * s / (d6 * d2));
                        }
                        pair[i].x_bar += dr;
                        pair[j].x_bar -= dr;
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// The growth loop
// ---------------------------------------------------------------------------

fn union_of(meshes: &[TriangleMesh]) -> TriangleMesh {
    let refs: Vec<(&TriangleMesh, u32)> =
        meshes.iter().enumerate().map(|(i, m)| (m, i as u32)).collect();
    TriangleMesh::union(&refs)
}

fn split_by_object(union: &TriangleMesh, count: usize) -> Vec<TriangleMesh> {
    (0..count as u32)
        .map(|id| {
            union
                .object_submesh(id)
                .expect("every input object keeps triangles")
        })
        .collect()
}

fn has_degenerate(mesh: &TriangleMesh) -> bool {
    (0..mesh.triangle_count())
        .any(|t| mesh.area_vector(t).norm_squared() < DEGENERATE_SQ_AREA)
}

fn per_object_chi(union: &TriangleMesh, count: usize) -> Vec<i64> {
    split_by_object(union, count)
        .iter()
        .map(|m| m.euler_characteristic().expect("valid indices"))
        .collect()
}

/// Remeshing pass: split edges longer than `edge_max`, then collapse edges
/// shorter than `edge_min`. Splits leave the surface point set unchanged;
/// collapses are additionally rejected when they would introduce
/// intersections.
fn remesh(union: &mut TriangleMesh, cfg: &GrowthConfig) {
    // Split pass over a snapshot of long edges.
    let long_edges: Vec<(usize, usize)> = union
        .edges()
        .into_iter()
        .filter(|&(u, v)| (union.vertices[u] - union.vertices[v]).norm() > cfg.edge_max)
        .collect();
    for edge in long_edges {
        if let Ok(next) = edge_split(union, edge) {
            *union = next;
        }
    }
    // Collapse pass: rescan because collapses renumber vertices.
    let mut budget = union.edges().len();
    loop {
        if budget == 0 {
            break;
        }
        let short = union.edges().into_iter().find(|&(u, v)| {
            (union.vertices[u] - union.vertices[v]).norm() < cfg.edge_min
        });
        let Some(edge) = short else { break };
        budget -= 1;
        match edge_collapse(union, edge) {
            Ok(next) => {
                if detect_self_intersections(&next).is_empty() {
                    *union = next;
                } else {
                    break; // geometry too tight to coarsen safely
                }
            }
            Err(_) => break,
        }
    }
}

/// Result of a staged growth run.
pub struct StagedGrowth {
    /// Grown meshes, in input order.
    pub meshes: Vec<TriangleMesh>,
    pub trace: GrowthTrace,
    /// One mesh list per requested stage.
    pub snapshots: Vec<Vec<TriangleMesh>>,
}

/// Grows `meshes` for `cfg.max_iterations` iterations inside `env`. Returns
/// the grown meshes (same order) and the per-iteration trace. Genus,
/// component count, and intersection freedom are enforced at every accepted
/// step; the run always completes, rejected iterations are recorded.
pub fn grow(
    meshes: &[TriangleMesh],
    env: &OccupancyGrid,
    cfg: &GrowthConfig,
) -> Result<(Vec<TriangleMesh>, GrowthTrace), GrowthError> {
    let staged = grow_staged(meshes, env, cfg, &[])?;
    Ok((staged.meshes, staged.trace))
}

/// Like [`grow`], also emitting mesh snapshots at the requested
/// accepted-iteration counts (`stages` sorted ascending; stage 0 is the
/// input itself). Stages beyond the last accepted iteration yield the final
/// state.
pub fn grow_staged(
    meshes: &[TriangleMesh],
    env: &OccupancyGrid,
    cfg: &GrowthConfig,
    stages: &[u32],
) -> Result<StagedGrowth, GrowthError> {
    cfg.validate()?;
    if !stages.windows(2).all(|w| w[0] <= w[1]) {
        return Err(GrowthError::Config("stages must be sorted".into()));
    }
    if meshes.is_empty() {
        return Err(GrowthError::Precondition("no meshes".into()));
    }
    for (i, mesh) in meshes.iter().enumerate() {
        let (closed, oriented) = mesh.closed_and_oriented();
        if !closed || !oriented {
            return Err(GrowthError::Precondition(format!(
                "mesh {i} is not a closed oriented surface"
            )));
        }
    }
    let mut union = union_of(meshes);
    if !detect_self_intersections(&union).is_empty() {
        return Err(GrowthError::Precondition(
            "input union has intersections".into(),
        ));
    }

    let n_objects = meshes.len();
    let baseline_chi = per_object_chi(&union, n_objects);
    let baseline_components = union.connected_components().len();

    let mut trace = GrowthTrace::default();
    let mut snapshots: Vec<Vec<TriangleMesh>> = Vec::with_capacity(stages.len());
    let mut next_stage = 0usize;
    let mut accepted_count: u32 = 0;
    // Stage 0 snapshots are the inputs themselves.
    while next_stage < stages.len() && stages[next_stage] == 0 {
        snapshots.push(meshes.to_vec());
        next_stage += 1;
    }
    if cfg.max_iterations == 0 {
        while next_stage < stages.len() {
            snapshots.push(meshes.to_vec());
            next_stage += 1;
        }
        return Ok(StagedGrowth {
            meshes: meshes.to_vec(),
            trace,
            snapshots,
        });
    }

    // Deterministic initial jitter, guarded against intersections.
    let jitter_dirs: Vec<Vec3> = (0..union.vertex_count())
        .map(|i| {
            let mut rng = rng_for(cfg.rng_seed, Stream::Jitter, i as u64);
            let v = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let n = v.norm();
            if n > 1e-12 {
                v / n
            } else {
                Vec3::x()
            }
        })
        .collect();
    let base_positions = union.vertices.clone();
    let mut magnitude = 0.05 * cfg.edge_min;
    for _ in 0..=MAX_HALVINGS {
        for (i, v) in union.vertices.iter_mut().enumerate() {
            *v = base_positions[i] + jitter_dirs[i] * magnitude;
        }
        if !has_degenerate(&union) && detect_self_intersections(&union).is_empty() {
            break;
        }
        magnitude *= 0.5;
        if magnitude < 1e-15 {
            union.vertices.clone_from(&base_positions);
            break;
        }
    }

    let field = PenetrationField::from_env(env);
    let displacement_cap = 0.5 * cfg.edge_min;
    let mut step = cfg.step_size;
    let mut current = objective_impl(&union, &field, cfg, true);

    for iteration in 0..cfg.max_iterations {
        let gradient = gradient_impl(&union, &field, cfg, true);
        let max_grad = gradient.iter().map(|g| g.norm()).fold(0.0, f64::max);
        let mut accepted = false;

        if max_grad > 0.0 {
            let mut trial_step = step.min(displacement_cap / max_grad);
            for _ in 0..=MAX_HALVINGS {
                let mut trial = union.clone();
                for (v, g) in trial.vertices.iter_mut().zip(&gradient) {
                    *v -= g * trial_step;
                }
                if !has_degenerate(&trial) && detect_self_intersections(&trial).is_empty() {
                    let trial_obj = objective_impl(&trial, &field, cfg, true);
                    if trial_obj.total <= current.total + DESCENT_SLACK {
                        union = trial;
                        current = trial_obj;
                        accepted = true;
                        break;
                    }
                }
                trial_step *= 0.5;
            }
            if accepted {
                // Recover the step for the next iteration.
                step = (step * 1.5).min(cfg.step_size);
            } else {
                step = (step * 0.5).max(cfg.step_size / 1024.0);
            }
        }

        if accepted {
            accepted_count += 1;
            if cfg.remesh_every > 0 && accepted_count.is_multiple_of(cfg.remesh_every) {
                remesh(&mut union, cfg);
                debug_assert!(detect_self_intersections(&union).is_empty());
                debug_assert_eq!(per_object_chi(&union, n_objects), baseline_chi);
                current = objective_impl(&union, &field, cfg, true);
            }
            while next_stage < stages.len() && stages[next_stage] == accepted_count {
                snapshots.push(split_by_object(&union, n_objects));
                next_stage += 1;
            }
        }

        let chi = union.euler_characteristic().expect("valid indices");
        let components = union.connected_components().len();
        debug_assert_eq!(components, baseline_components);
        trace.records.push(IterationRecord {
            iteration,
            area: current.area,
            repulsive_energy: current.repulsive,
            chi,
            component_count: components,
            accepted,
        });
    }

    // Final integrity: per-object topology unchanged.
    assert_eq!(per_object_chi(&union, n_objects), baseline_chi);
    assert_eq!(union.connected_components().len(), baseline_components);

    while next_stage < stages.len() {
        snapshots.push(split_by_object(&union, n_objects));
        next_stage += 1;
    }
    Ok(StagedGrowth {
        meshes: split_by_object(&union, n_objects),
        trace,
        snapshots,
    })
}
