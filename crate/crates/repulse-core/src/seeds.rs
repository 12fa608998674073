//! Seed meshes of prescribed genus and their placement in environment free
//! space.
//!
//! Seeds are boundary surfaces of voxel solids: a solid slab with `g` square
//! tunnels drilled through it has a genus-`g` boundary, exactly. Boundary
//! extraction welds face corners per solid-cell cluster, which resolves the
//! pinched (non-manifold) voxel configurations by vertex duplication, so the
//! output is always a closed orientable surface. A few rounds of
//! intersection-guarded Laplacian smoothing round the shapes off without
//! touching their topology.
//!
//! Linked pairs are built as two perpendicular plates-with-holes threaded
//! through each other chain-link style at the voxel level, so linkage is
//! combinatorial, not a fragile geometric afterthought.

use crate::mesh::{detect_self_intersections, TriangleMesh, Vec3, DEGENERATE_SQ_AREA};
use crate::rng::{rng_for, Stream};
use crate::wfc::OccupancyGrid;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeedError {
    #[error("linked seeds need genus >= 1 on both sides (got {0} and {1})")]
    LinkedGenusZero(u64, u64),
    #[error("no valid placement found for scene seed {scene_seed} after {attempts} attempts")]
    Placement { scene_seed: u64, attempts: u32 },
    #[error("scene must contain 1-3 seeds, got {0}")]
    SceneSize(usize),
    #[error("seed genus {0} exceeds configured maximum {1}")]
    GenusTooLarge(u64, u64),
    #[error("linked seeds must reference each other symmetrically")]
    AsymmetricLink,
}

/// Requested seed: genus, optional link partner (by index into the scene's
/// spec list), and a size multiplier applied on top of the automatic fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedSpec {
    pub genus: u64,
    pub linked_to: Option<usize>,
    pub scale: f64,
}

impl SeedSpec {
    pub fn new(genus: u64) -> Self {
        SeedSpec {
            genus,
            linked_to: None,
            scale: 1.0,
        }
    }
}

/// Checks scene-level spec invariants (1-3 seeds, genus cap, symmetric links).
pub fn validate_specs(specs: &[SeedSpec], max_genus: u64) -> Result<(), SeedError> {
    if specs.is_empty() || specs.len() > 3 {
        return Err(SeedError::SceneSize(specs.len()));
    }
    for (i, spec) in specs.iter().enumerate() {
        if spec.genus > max_genus {
            return Err(SeedError::GenusTooLarge(spec.genus, max_genus));
        }
        if let Some(j) = spec.linked_to {
            let ok = j < specs.len() && j != i && specs[j].linked_to == Some(i);
            if !ok {
                return Err(SeedError::AsymmetricLink);
            }
            if spec.genus == 0 || specs[j].genus == 0 {
                return Err(SeedError::LinkedGenusZero(spec.genus, specs[j].genus));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Voxel solids and boundary extraction
// ---------------------------------------------------------------------------

/// Dense boolean voxel solid on an integer lattice window.
struct VoxelSolid {
    min: [i64; 3],
    dims: [usize; 3],
    cells: Vec<bool>,
}

impl VoxelSolid {
    fn block(min: [i64; 3], dims: [usize; 3]) -> Self {
        VoxelSolid {
            min,
            dims,
            cells: vec![true; dims[0] * dims[1] * dims[2]],
        }
    }

    fn index(&self, c: [i64; 3]) -> Option<usize> {
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let rel = c[k] - self.min[k];
            if rel < 0 || rel >= self.dims[k] as i64 {
                return None;
            }
            idx[k] = rel as usize;
        }
        Some(idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2]))
    }

    fn is_solid(&self, c: [i64; 3]) -> bool {
        self.index(c).is_some_and(|i| self.cells[i])
    }

    fn carve(&mut self, c: [i64; 3]) {
        if let Some(i) = self.index(c) {
            self.cells[i] = false;
        }
    }
}

/// Face directions with their quad corner offsets (outward winding).
/// Corners are lattice points relative to the solid cell's min corner.
const FACE_TABLE: [([i64; 3], [[i64; 3]; 4]); 6] = [
    // +x
    (
        [1, 0, 0],
        [[1, 0, 0], [1, 1, 0], [1, 1, 1], [1, 0, 1]],
    ),
    // -x
    (
        [-1, 0, 0],
        [[0, 0, 0], [0, 0, 1], [0, 1, 1], [0, 1, 0]],
    ),
    // +y
    (
        [0, 1, 0],
        [[0, 1, 0], [0, 1, 1], [1, 1, 1], [1, 1, 0]],
    ),
    // -y
    (
        [0, -1, 0],
        [[0, 0, 0], [1, 0, 0], [1, 0, 1], [0, 0, 1]],
    ),
    // +z
    (
        [0, 0, 1],
        [[0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
    ),
    // -z
    (
        [0, 0, -1],
        [[0, 0, 0], [0, 1, 0], [1, 1, 0], [1, 0, 0]],
    ),
];

/// Welding key: a lattice corner plus the solid-cell cluster it belongs to.
/// The cluster is the face-connected component (within the corner's 2x2x2
/// cell neighborhood) containing the face's owning cell, identified by its
/// minimal member cell. Corners where the solid pinches diagonally get one
/// vertex per cluster, which keeps the surface manifold.
fn corner_cluster(solid: &VoxelSolid, corner: [i64; 3], owner: [i64; 3]) -> [i64; 3] {
    let mut cells: Vec<[i64; 3]> = Vec::with_capacity(8);
    for dx in -1..=0i64 {
        for dy in -1..=0i64 {
            for dz in -1..=0i64 {
                let c = [corner[0] + dx, corner[1] + dy, corner[2] + dz];
                if solid.is_solid(c) {
                    cells.push(c);
                }
            }
        }
    }
    // Flood fill from `owner` across face-adjacent solid cells of the block.
    let mut component = vec![owner];
    let mut frontier = vec![owner];
    while let Some(cur) = frontier.pop() {
        for other in &cells {
            let diff: i64 = (0..3).map(|k| (cur[k] - other[k]).abs()).sum();
            if diff == 1 && !component.contains(other) {
                component.push(*other);
                frontier.push(*other);
            }
        }
    }
    *component.iter().min().unwrap()
}

/// Boundary surface of a voxel solid as a closed oriented triangle mesh,
/// in lattice units.
fn extract_boundary(solid: &VoxelSolid) -> TriangleMesh {
    use std::collections::HashMap;
    let mut vertex_of: HashMap<([i64; 3], [i64; 3]), usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();

    for z in 0..solid.dims[2] as i64 {
        for y in 0..solid.dims[1] as i64 {
            for x in 0..solid.dims[0] as i64 {
                let cell = [
                    solid.min[0] + x,
                    solid.min[1] + y,
                    solid.min[2] + z,
                ];
                if !solid.is_solid(cell) {
                    continue;
                }
                for (normal, corners) in FACE_TABLE {
                    let neighbor = [
                        cell[0] + normal[0],
                        cell[1] + normal[1],
                        cell[2] + normal[2],
                    ];
                    if solid.is_solid(neighbor) {
                        continue;
                    }
                    let quad: Vec<usize> = corners
                        .iter()
                        .map(|offset| {
                            let corner = [
                                cell[0] + offset[0],
                                cell[1] + offset[1],
                                cell[2] + offset[2],
                            ];
                            let cluster = corner_cluster(solid, corner, cell);
                            *vertex_of.entry((corner, cluster)).or_insert_with(|| {
                                vertices.push(Vec3::new(
                                    corner[0] as f64,
                                    corner[1] as f64,
                                    corner[2] as f64,
                                ));
                                vertices.len() - 1
                            })
                        })
                        .collect();
                    triangles.push([quad[0], quad[1], quad[2]]);
                    triangles.push([quad[0], quad[2], quad[3]]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

// ---------------------------------------------------------------------------
// Smoothing
// ---------------------------------------------------------------------------

/// Laplacian relaxation, cosmetic only: rounds are rejected (step halved)
/// whenever they would create self-intersections or degenerate triangles.
fn smooth_guarded(mesh: &mut TriangleMesh, rounds: usize, lambda: f64) {
    let n = mesh.vertex_count();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in &mesh.edges() {
        neighbors[u].push(v);
        neighbors[v].push(u);
    }
    for _ in 0..rounds {
        let mut step = lambda;
        'attempt: for _ in 0..4 {
            let mut moved = mesh.clone();
            for i in 0..n {
                if neighbors[i].is_empty() {
                    continue;
                }
                let centroid = neighbors[i]
                    .iter()
                    .fold(Vec3::zeros(), |acc, &j| acc + mesh.vertices[j])
                    / neighbors[i].len() as f64;
                moved.vertices[i] += (centroid - mesh.vertices[i]) * step;
            }
            let degenerate = (0..moved.triangle_count())
                .any(|t| moved.area_vector(t).norm_squared() < DEGENERATE_SQ_AREA);
            if !degenerate && detect_self_intersections(&moved).is_empty() {
                *mesh = moved;
                break 'attempt;
            }
            step *= 0.5;
        }
    }
}

const SMOOTH_ROUNDS: usize = 3;
const SMOOTH_LAMBDA: f64 = 0.5;

// ---------------------------------------------------------------------------
// Seed constructions
// ---------------------------------------------------------------------------

/// Closed orientable mesh of exactly the requested genus: the boundary of a
/// `(4g+3) x 3 x 3` solid slab with `g` unit tunnels drilled through it,
/// smoothed. Lattice units; callers scale and place.
pub fn make_seed(genus: u64) -> TriangleMesh {
    let g = genus as i64;
    let mut solid = VoxelSolid::block([0, 0, 0], [(4 * g + 3) as usize, 3, 3]);
    for i in 0..g {
        for z in 0..3 {
            solid.carve([4 * i + 3, 1, z]);
        }
    }
    let mut mesh = extract_boundary(&solid);
    smooth_guarded(&mut mesh, SMOOTH_ROUNDS, SMOOTH_LAMBDA);
    mesh
}

/// A plate with a central hole (genus 1) plus `genus - 1` extra unit tunnels
/// through its top bar. Local axes: (a, b) span the plate, t is the 3-cell
/// thickness. `map` turns local cells into world cells.
fn frame_solid(genus: u64, map: impl Fn([i64; 3]) -> [i64; 3]) -> VoxelSolid {
    let width = frame_width(genus);
    let height = 11i64;
    // World bounds: probe the 8 local corners through the map.
    let mut min = [i64::MAX; 3];
    let mut max = [i64::MIN; 3];
    for &a in &[0, width - 1] {
        for &b in &[0, height - 1] {
            for &t in &[0, 2] {
                let w = map([a, b, t]);
                for k in 0..3 {
                    min[k] = min[k].min(w[k]);
                    max[k] = max[k].max(w[k]);
                }
            }
        }
    }
    let dims = [
        (max[0] - min[0] + 1) as usize,
        (max[1] - min[1] + 1) as usize,
        (max[2] - min[2] + 1) as usize,
    ];
    let mut solid = VoxelSolid {
        min,
        dims,
        cells: vec![false; dims[0] * dims[1] * dims[2]],
    };
    for a in 0..width {
        for b in 0..height {
            let in_hole = a >= 3 && a < width - 3 && b >= 3 && b < height - 3;
            if in_hole {
                continue;
            }
            for t in 0..3 {
                let w = map([a, b, t]);
                let idx = solid.index(w).expect("mapped cell inside bounds");
                solid.cells[idx] = true;
            }
        }
    }
    // Extra tunnels through the top bar (b = height-2), drilled along t.
    for j in 0..genus.saturating_sub(1) as i64 {
        let a = 2 + 4 * j;
        for t in 0..3 {
            solid.carve(map([a, height - 2, t]));
        }
    }
    solid
}

fn frame_width(genus: u64) -> i64 {
    // Room for the central hole plus genus-1 extra tunnels in the top bar.
    11i64.max(4 * genus as i64 - 1)
}

/// Two disjoint interlinked meshes of the stated genera (both >= 1): plate A
/// lies in the xy plane, plate B in the xz plane, threaded through each
/// other's central holes with one lattice cell of clearance everywhere.
pub fn make_linked_pair(
    genus_a: u64,
    genus_b: u64,
) -> Result<(TriangleMesh, TriangleMesh), SeedError> {
    if genus_a == 0 || genus_b == 0 {
        return Err(SeedError::LinkedGenusZero(genus_a, genus_b));
    }
    let wa = frame_width(genus_a);
    let wb = frame_width(genus_b);
    // B's left bar threads A's hole; A's right bar threads B's hole.
    let x0 = 4.max(wa + 4 - wb);
    debug_assert!(x0 <= wa - 7);
    let solid_a = frame_solid(genus_a, |[a, b, t]| [a, b, t]);
    let solid_b = frame_solid(genus_b, move |[a, b, t]| [a + x0, t + 4, b - 4]);

    let mesh_a = extract_boundary(&solid_a);
    let mesh_b = extract_boundary(&solid_b);
    // Smooth the union so the guard also protects the clearance between the
    // two plates, then split back apart.
    let mut union = TriangleMesh::union(&[(&mesh_a, 0), (&mesh_b, 1)]);
    smooth_guarded(&mut union, SMOOTH_ROUNDS, SMOOTH_LAMBDA);
    let a = union.object_submesh(0).expect("object 0 present");
    let b = union.object_submesh(1).expect("object 1 present");
    Ok((a, b))
}

// ---------------------------------------------------------------------------
// Placement
// ---------------------------------------------------------------------------

/// The 24 proper axis-aligned rotations as (axis permutation, signs).
fn axis_rotations() -> Vec<([usize; 3], [f64; 3])> {
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut out = Vec::with_capacity(24);
    for perm in perms {
        // Permutation parity decides which sign combinations keep det = +1.
        let parity = {
            let mut p = perm;
            let mut swaps = 0;
            for i in 0..3 {
                while p[i] != i {
                    let j = p[i];
                    p.swap(i, j);
                    swaps += 1;
                }
            }
            swaps % 2
        };
        for s in 0..8u8 {
            let signs = [
                if s & 1 == 0 { 1.0 } else { -1.0 },
                if s & 2 == 0 { 1.0 } else { -1.0 },
                if s & 4 == 0 { 1.0 } else { -1.0 },
            ];
            let neg = signs.iter().filter(|&&v| v < 0.0).count();
            let det_positive = (neg % 2 == 0) == (parity == 0);
            if det_positive {
                out.push((perm, signs));
            }
        }
    }
    out
}

fn apply_rotation(mesh: &TriangleMesh, rot: &([usize; 3], [f64; 3])) -> TriangleMesh {
    let (perm, signs) = rot;
    let mut out = mesh.clone();
    for v in &mut out.vertices {
        let src = [v.x, v.y, v.z];
        *v = Vec3::new(
            signs[0] * src[perm[0]],
            signs[1] * src[perm[1]],
            signs[2] * src[perm[2]],
        );
    }
    out
}

const PLACEMENT_ATTEMPTS: u32 = 1000;

/// Builds the seeds described by `specs` and places them in the free space of
/// `env`: random axis-aligned orientation, scaled to fit a free box, pairwise
/// separation of at least one cell between units (linked pairs move as one
/// unit). Deterministic in `rng_seed`.
pub fn place_seeds(
    specs: &[SeedSpec],
    env: &OccupancyGrid,
    rng_seed: u64,
) -> Result<Vec<TriangleMesh>, SeedError> {
    validate_specs(specs, u64::MAX)?;
    let mut rng = rng_for(rng_seed, Stream::Placement, 0);
    let rotations = axis_rotations();

    // Units: indices of specs moving together (a linked pair is one unit).
    let mut units: Vec<Vec<usize>> = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        match spec.linked_to {
            Some(j) if j < i => {
                let unit = units.iter_mut().find(|u| u.contains(&j)).unwrap();
                unit.push(i);
            }
            _ => units.push(vec![i]),
        }
    }

    // Build unit meshes in lattice units.
    let mut built: Vec<Vec<TriangleMesh>> = Vec::new();
    for unit in &units {
        match unit.as_slice() {
            [single] => built.push(vec![make_seed(specs[*single].genus)]),
            [a, b] => {
                let (ma, mb) = make_linked_pair(specs[*a].genus, specs[*b].genus)?;
                built.push(vec![ma, mb]);
            }
            _ => unreachable!("links are pairwise"),
        }
    }

    let (nx, ny, nz) = env.dims;
    let cell = env.cell_size;
    // Target box edge: leave room for every unit plus corridor clearance.
    let min_dim = nx.min(ny).min(nz);
    let h_max = ((min_dim as f64 / (1.6 * (units.len() as f64).cbrt())) as usize).max(3);
    let mut claimed: Vec<([i64; 3], [i64; 3])> = Vec::new(); // (origin, dims) in cells
    let mut placed: Vec<(usize, TriangleMesh)> = Vec::new();

    for (unit_idx, unit) in units.iter().enumerate() {
        let meshes = &built[unit_idx];
        let mut success = false;
        for attempt in 0..PLACEMENT_ATTEMPTS {
            // Shrink the target box gradually as attempts fail.
            let shrink = (attempt / 50) as usize;
            let h = h_max.saturating_sub(shrink).max(3);
            let rot = &rotations[rng.gen_range(0..rotations.len())];
            let rotated: Vec<TriangleMesh> =
                meshes.iter().map(|m| apply_rotation(m, rot)).collect();
            let union = TriangleMesh::union(
                &rotated.iter().enumerate().map(|(k, m)| (m, k as u32)).collect::<Vec<_>>(),
            );
            let (lo, hi) = union.aabb().expect("seed meshes are non-empty");
            let extent = hi - lo;
            let max_extent = extent.max();
            let box_dims: Vec<i64> = (0..3)
                .map(|k| ((extent[k] / max_extent) * h as f64).ceil() as i64)
                .map(|b| b.max(1))
                .collect();
            if box_dims
                .iter()
                .zip([nx, ny, nz])
                .any(|(&b, d)| b > d as i64)
            {
                continue;
            }
            let origin = [
                rng.gen_range(0..=(nx as i64 - box_dims[0])),
                rng.gen_range(0..=(ny as i64 - box_dims[1])),
                rng.gen_range(0..=(nz as i64 - box_dims[2])),
            ];
            // The box must be barrier-free.
            let mut free = true;
            'cells: for dz in 0..box_dims[2] {
                for dy in 0..box_dims[1] {
                    for dx in 0..box_dims[0] {
                        if env.is_occupied(
                            (origin[0] + dx) as usize,
                            (origin[1] + dy) as usize,
                            (origin[2] + dz) as usize,
                        ) {
                            free = false;
                            break 'cells;
                        }
                    }
                }
            }
            if !free {
                continue;
            }
            // Expanded by one cell, the box must not touch earlier units.
            let separated = claimed.iter().all(|(co, cd)| {
                (0..3).any(|k| {
                    origin[k] + box_dims[k] < co[k] || co[k] + cd[k] < origin[k]
                })
            });
            if !separated {
                continue;
            }
            // Fit: uniform scale with a margin, centered in the box.
            let margin = 0.8;
            let scale = specs[unit[0]].scale
                * margin
                * (0..3)
                    .map(|k| box_dims[k] as f64 * cell / extent[k])
                    .fold(f64::INFINITY, f64::min);
            let box_center = Vec3::new(
                (origin[0] as f64 + box_dims[0] as f64 / 2.0) * cell,
                (origin[1] as f64 + box_dims[1] as f64 / 2.0) * cell,
                (origin[2] as f64 + box_dims[2] as f64 / 2.0) * cell,
            );
            let mesh_center = (lo + hi) * 0.5;
            for (k, m) in rotated.iter().enumerate() {
                let moved = m
                    .scaled(scale)
                    .translated(box_center - mesh_center * scale);
                placed.push((unit[k], moved));
            }
            claimed.push((origin, [box_dims[0], box_dims[1], box_dims[2]]));
            success = true;
            break;
        }
        if !success {
            return Err(SeedError::Placement {
                scene_seed: rng_seed,
                attempts: PLACEMENT_ATTEMPTS,
            });
        }
    }

    placed.sort_by_key(|(i, _)| *i);
    Ok(placed.into_iter().map(|(_, m)| m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{genus_of_component, scene_summary};

    #[test]
    fn seeds_have_exact_genus() {
        for g in 0..=3 {
            let seed = make_seed(g);
            let d = seed.validate_manifold();
            assert!(d.is_closed, "genus {g} not closed");
            assert!(d.is_oriented, "genus {g} not oriented");
            assert!(d.self_intersections.is_empty(), "genus {g} intersects");
            assert_eq!(d.euler_characteristic, 2 - 2 * g as i64);
            assert_eq!(genus_of_component(&seed).unwrap(), g);
        }
    }

    #[test]
    fn linked_pair_is_disjoint_and_correct() {
        let (a, b) = make_linked_pair(1, 3).unwrap();
        assert_eq!(genus_of_component(&a).unwrap(), 1);
        assert_eq!(genus_of_component(&b).unwrap(), 3);
        let union = TriangleMesh::union(&[(&a, 0), (&b, 1)]);
        assert_eq!(union.connected_components().len(), 2);
        assert!(detect_self_intersections(&union).is_empty());

        let (a, b) = make_linked_pair(1, 1).unwrap();
        let summary = scene_summary(&[a, b]).unwrap();
        assert_eq!(summary.genus_multiset(), vec![1, 1]);
    }

    #[test]
    fn linked_pair_rejects_genus_zero() {
        assert!(matches!(
            make_linked_pair(0, 1),
            Err(SeedError::LinkedGenusZero(0, 1))
        ));
        assert!(matches!(
            make_linked_pair(2, 0),
            Err(SeedError::LinkedGenusZero(2, 0))
        ));
    }

    #[test]
    fn linked_pair_is_actually_linked() {
        // Chain-link witness: plate A's hole is threaded by plate B. Check
        // that B has vertices on both sides of A's hole plane inside the
        // hole's footprint, which is how the construction threads them.
        let (a, b) = make_linked_pair(1, 1).unwrap();
        let (alo, ahi) = a.aabb().unwrap();
        let mid_z = (alo.z + ahi.z) / 2.0;
        let above = b.vertices.iter().any(|v| v.z > mid_z + 1.0);
        let below = b.vertices.iter().any(|v| v.z < mid_z - 1.0);
        assert!(above && below, "B does not pass through A's plane");
    }

    #[test]
    fn placement_in_empty_env_succeeds() {
        let env = OccupancyGrid::empty((12, 12, 12), 1.0);
        let meshes = place_seeds(&[SeedSpec::new(0)], &env, 77).unwrap();
        assert_eq!(meshes.len(), 1);
        assert_eq!(genus_of_component(&meshes[0]).unwrap(), 0);
        // Inside the env bounds.
        let (lo, hi) = meshes[0].aabb().unwrap();
        assert!(lo.min() >= 0.0 && hi.max() <= 12.0);
    }

    #[test]
    fn three_seeds_keep_separation() {
        let env = OccupancyGrid::empty((18, 18, 18), 1.0);
        let specs = vec![SeedSpec::new(0), SeedSpec::new(2), SeedSpec::new(3)];
        let meshes = place_seeds(&specs, &env, 5).unwrap();
        assert_eq!(meshes.len(), 3);
        let union = TriangleMesh::union(&[
            (&meshes[0], 0),
            (&meshes[1], 1),
            (&meshes[2], 2),
        ]);
        assert!(detect_self_intersections(&union).is_empty());
        assert_eq!(union.connected_components().len(), 3);
        // Pairwise gaps of at least one cell between AABBs.
        for i in 0..3 {
            for j in i + 1..3 {
                let (lo_i, hi_i) = meshes[i].aabb().unwrap();
                let (lo_j, hi_j) = meshes[j].aabb().unwrap();
                let separated = (0..3).any(|k| {
                    hi_i[k] + 1.0 <= lo_j[k] + 1e-9 || hi_j[k] + 1.0 <= lo_i[k] + 1e-9
                });
                assert!(separated, "seeds {i} and {j} too close");
            }
        }
    }

    #[test]
    fn crowded_env_reports_placement_error() {
        // Occupy everything except a 2x2x2 pocket: the smallest usable box
        // needs 3 cells along the seed's long axis, so nothing fits.
        let mut env = OccupancyGrid::empty((8, 8, 8), 1.0);
        for z in 0..8 {
            for y in 0..8 {
                for x in 0..8 {
                    if x >= 2 || y >= 2 || z >= 2 {
                        let idx = env.index(x, y, z);
                        env.occupied[idx] = true;
                    }
                }
            }
        }
        let specs = vec![SeedSpec::new(1)];
        match place_seeds(&specs, &env, 3) {
            Err(SeedError::Placement { scene_seed, .. }) => assert_eq!(scene_seed, 3),
            other => panic!("expected placement error, got {other:?}"),
        }
    }

    #[test]
    fn too_few_pockets_reports_placement_error() {
        // Two free pockets, three seeds: the third placement must fail.
        let mut env = OccupancyGrid::empty((11, 5, 5), 1.0);
        for z in 0..5 {
            for y in 0..5 {
                for x in 0..11 {
                    let in_pocket_a = x < 4;
                    let in_pocket_b = x >= 7;
                    if !(in_pocket_a || in_pocket_b) {
                        let idx = env.index(x, y, z);
                        env.occupied[idx] = true;
                    }
                }
            }
        }
        let specs = vec![SeedSpec::new(0), SeedSpec::new(0), SeedSpec::new(0)];
        assert!(matches!(
            place_seeds(&specs, &env, 4),
            Err(SeedError::Placement { .. })
        ));
    }

    #[test]
    fn linked_placement_keeps_linkage() {
        let env = OccupancyGrid::empty((14, 14, 14), 1.0);
        let mut spec_a = SeedSpec::new(1);
        spec_a.linked_to = Some(1);
        let mut spec_b = SeedSpec::new(3);
        spec_b.linked_to = Some(0);
        let meshes = place_seeds(&[spec_a, spec_b], &env, 21).unwrap();
        assert_eq!(meshes.len(), 2);
        let union = TriangleMesh::union(&[(&meshes[0], 0), (&meshes[1], 1)]);
        assert_eq!(union.connected_components().len(), 2);
        assert!(detect_self_intersections(&union).is_empty());
        let summary = scene_summary(&meshes.to_vec()).unwrap();
        assert_eq!(summary.genus_multiset(), vec![1, 3]);
    }

    #[test]
    fn placement_is_deterministic() {
        let env = OccupancyGrid::empty((12, 12, 12), 1.0);
        let specs = vec![SeedSpec::new(1), SeedSpec::new(2)];
        let a = place_seeds(&specs, &env, 9).unwrap();
        let b = place_seeds(&specs, &env, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spec_validation_catches_bad_scenes() {
        assert!(matches!(
            validate_specs(&[], 3),
            Err(SeedError::SceneSize(0))
        ));
        let mut a = SeedSpec::new(1);
        a.linked_to = Some(1);
        let b = SeedSpec::new(1); // does not link back
        assert!(matches!(
            validate_specs(&[a, b], 3),
            Err(SeedError::AsymmetricLink)
        ));
        assert!(matches!(
            validate_specs(&[SeedSpec::new(7)], 3),
            Err(SeedError::GenusTooLarge(7, 3))
        ));
    }
}
