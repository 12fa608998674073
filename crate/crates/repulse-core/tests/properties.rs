//! Property tests for the spec-level invariants that hold across whole input
//! families, not just the worked examples.

use proptest::prelude::*;
use repulse_core::cloud::{augment, sample_cloud, AugmentConfig};
use repulse_core::mesh::{
    detect_self_intersections, detect_self_intersections_seq, edge_collapse, edge_split, shapes,
    triangles_intersect, TriangleMesh, Vec3,
};
use repulse_core::metrics::{accumulate, compute_metrics};
use repulse_core::topology::{ambiguity_witness, scene_summary, TopologySummary};
use repulse_core::wfc::{collapse, default_tileset, voxelize, BoundaryRule};

fn brute_force_pairs(mesh: &TriangleMesh) -> Vec<(usize, usize)> {
    let n = mesh.triangle_count();
    let mut out = Vec::new();
    for t in 0..n {
        for c in t + 1..n {
            let shared = mesh.triangles[t]
                .iter()
                .any(|v| mesh.triangles[c].contains(v));
            if shared {
                continue;
            }
            if triangles_intersect(&mesh.triangle_points(t), &mesh.triangle_points(c)) {
                out.push((t, c));
            }
        }
    }
    out
}

fn summary_of(genera: &[u64]) -> TopologySummary {
    let mut meshes = Vec::new();
    let mut offset = 0.0;
    for &g in genera {
        let m = repulse_core::seeds::make_seed(g);
        let (lo, hi) = m.aabb().unwrap();
        meshes.push(m.translated(Vec3::new(offset - lo.x, 0.0, 0.0)));
        offset += (hi - lo).x + 5.0;
    }
    scene_summary(&meshes).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chi_invariant_under_edits(
        nu in 4usize..7,
        nv in 4usize..8,
        edits in prop::collection::vec((any::<u32>(), any::<bool>()), 1..40),
    ) {
        let mut mesh = shapes::torus(nu, nv, 2.0, 0.5);
        let chi = mesh.euler_characteristic().unwrap();
        for (pick, do_split) in edits {
            let edges = mesh.edges();
            let edge = edges[pick as usize % edges.len()];
            if do_split {
                mesh = edge_split(&mesh, edge).unwrap();
            } else if let Ok(next) = edge_collapse(&mesh, edge) {
                mesh = next;
            }
            prop_assert_eq!(mesh.euler_characteristic().unwrap(), chi);
            let (closed, oriented) = mesh.closed_and_oriented();
            prop_assert!(closed && oriented);
            prop_assert_eq!(mesh.connected_components().len(), 1);
        }
    }

    #[test]
    fn bvh_equals_brute_force(
        dx in -1.5f64..1.5,
        dy in -1.5f64..1.5,
        dz in -1.5f64..1.5,
        r in 0.4f64..1.4,
    ) {
        let a = shapes::uv_sphere(5, 7, 1.0);
        let b = shapes::uv_sphere(4, 8, r).translated(Vec3::new(dx, dy, dz));
        let scene = TriangleMesh::union(&[(&a, 0), (&b, 1)]);
        let fast = detect_self_intersections(&scene);
        prop_assert_eq!(&fast, &brute_force_pairs(&scene));
        prop_assert_eq!(fast, detect_self_intersections_seq(&scene));
    }

    #[test]
    fn area_scales_quadratically(s in 0.1f64..10.0) {
        let mesh = shapes::torus(5, 8, 2.0, 0.6);
        let base = mesh.surface_area();
        let scaled = mesh.scaled(s).surface_area();
        prop_assert!((scaled - s * s * base).abs() <= 1e-9 * scaled.max(base));
    }

    #[test]
    fn augment_preserves_labels(seed in any::<u64>(), n in 50usize..300) {
        let scene = vec![
            shapes::uv_sphere(4, 6, 1.0),
            shapes::torus(4, 6, 2.0, 0.5).translated(Vec3::new(7.0, 0.0, 0.0)),
        ];
        let cloud = sample_cloud(&scene, &[0, 1], n, seed).unwrap();
        let out = augment(&cloud, &AugmentConfig { rng_seed: seed, ..AugmentConfig::default() });
        prop_assert_eq!(out.len(), cloud.len());
        prop_assert_eq!(out.genus_label, cloud.genus_label);
        prop_assert_eq!(out.object_id, cloud.object_id);
    }

    #[test]
    fn metrics_invariants(labels in prop::collection::vec((0u32..4, 0u32..4), 1..200)) {
        let gt: Vec<u32> = labels.iter().map(|&(g, _)| g).collect();
        let pred: Vec<u32> = labels.iter().map(|&(_, p)| p).collect();
        let report = compute_metrics(&accumulate(&gt, &pred, 4).unwrap());
        // Permutation invariance (reverse is a permutation).
        let gt_r: Vec<u32> = gt.iter().rev().copied().collect();
        let pred_r: Vec<u32> = pred.iter().rev().copied().collect();
        let reversed = compute_metrics(&accumulate(&gt_r, &pred_r, 4).unwrap());
        prop_assert_eq!(&report, &reversed);
        // IoU <= Acc per class; OA within the recall range.
        let mut recalls = Vec::new();
        for c in &report.per_class {
            if let (Some(iou), Some(acc)) = (c.iou, c.acc) {
                prop_assert!(iou <= acc + 1e-9);
            }
            if let Some(acc) = c.acc {
                recalls.push(acc);
            }
        }
        let min = recalls.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = recalls.iter().cloned().fold(0.0, f64::max);
        prop_assert!(report.oa >= min - 1e-9 && report.oa <= max + 1e-9);
    }

    #[test]
    fn witness_is_symmetric_and_irreflexive(
        a in prop::collection::vec(0u64..4, 1..3),
        b in prop::collection::vec(0u64..4, 1..3),
    ) {
        let sa = summary_of(&a);
        let sb = summary_of(&b);
        prop_assert_eq!(ambiguity_witness(&sa, &sb), ambiguity_witness(&sb, &sa));
        // Equal genus multisets never witness.
        prop_assert!(!ambiguity_witness(&sa, &sa));
    }

    #[test]
    fn voxelize_counts_are_additive(seed in any::<u64>()) {
        let tiles = default_tileset();
        let grid = collapse((3, 3, 3), &tiles, seed, BoundaryRule::Closed).unwrap();
        let total: usize = grid
            .assignment
            .iter()
            .map(|&id| tiles[id as usize].occupied_count())
            .sum();
        prop_assert_eq!(voxelize(&grid, &tiles, 1.0).occupied_count(), total);
    }
}
