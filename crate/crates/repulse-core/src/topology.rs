//! Exact genus/Betti/Euler-characteristic oracle for closed orientable
//! surfaces, plus scene-level aggregation.
//!
//! For a closed orientable component, genus follows from the Euler
//! characteristic: `g = (2 - chi) / 2`. Scene Betti numbers aggregate as
//! `(C, sum of 2 g_i, C)` where `C` is the component count, since each closed
//! orientable component contributes one blob, `2g` independent loops, and
//! bounds exactly one void.

use crate::mesh::{MeshError, TriangleMesh};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("object {index}: {source}")]
    Object {
        index: usize,
        #[source]
        source: Box<TopologyError>,
    },
    #[error("mesh is not closed")]
    NotClosed,
    #[error("mesh is not orientable with its given winding")]
    NotOriented,
    #[error("expected a single component, found {0}")]
    MultiComponent(usize),
    #[error("Euler characteristic {0} is not of the form 2-2g; mesh is inconsistent")]
    OddCharacteristic(i64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Per-component topology facts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentTopology {
    pub genus: u64,
    pub chi: i64,
    pub vertex_count: usize,
    pub edge_count: usize,
    pub face_count: usize,
}

/// Scene-level summary: per-component genus plus aggregated Betti numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopologySummary {
    pub components: Vec<ComponentTopology>,
    /// (beta_0, beta_1, beta_2)
    pub scene_betti: (u64, u64, u64),
    pub scene_chi: i64,
}

impl TopologySummary {
    /// Component genera as a sorted multiset.
    pub fn genus_multiset(&self) -> Vec<u64> {
        let mut g: Vec<u64> = self.components.iter().map(|c| c.genus).collect();
        g.sort_unstable();
        g
    }
}

/// Genus of a single closed, oriented, connected mesh: `(2 - chi) / 2`.
pub fn genus_of_component(mesh: &TriangleMesh) -> Result<u64, TopologyError> {
    let chi = mesh.euler_characteristic()?;
    let (closed, oriented) = mesh.closed_and_oriented();
    if !closed {
        return Err(TopologyError::NotClosed);
    }
    if !oriented {
        return Err(TopologyError::NotOriented);
    }
    let components = mesh.connected_components().len();
    if components != 1 {
        return Err(TopologyError::MultiComponent(components));
    }
    let two_g = 2 - chi;
    if two_g < 0 || two_g % 2 != 0 {
        return Err(TopologyError::OddCharacteristic(chi));
    }
    Ok((two_g / 2) as u64)
}

fn component_topology(mesh: &TriangleMesh) -> Result<ComponentTopology, TopologyError> {
    let genus = genus_of_component(mesh)?;
    Ok(ComponentTopology {
        genus,
        chi: 2 - 2 * genus as i64,
        vertex_count: mesh.vertex_count(),
        edge_count: mesh.edges().len(),
        face_count: mesh.triangle_count(),
    })
}

/// Aggregates the scene: each input mesh must itself be a closed oriented
/// connected surface. Errors carry the offending object index.
pub fn scene_summary(meshes: &[TriangleMesh]) -> Result<TopologySummary, TopologyError> {
    let mut components = Vec::with_capacity(meshes.len());
    for (index, mesh) in meshes.iter().enumerate() {
        let c = component_topology(mesh).map_err(|source| TopologyError::Object {
            index,
            source: Box::new(source),
        })?;
        components.push(c);
    }
    Ok(summary_from_components(components))
}

/// Like [`scene_summary`] but splits one mesh into edge-connected components
/// first.
pub fn scene_summary_of_union(mesh: &TriangleMesh) -> Result<TopologySummary, TopologyError> {
    scene_summary(&mesh.connected_components())
}

fn summary_from_components(components: Vec<ComponentTopology>) -> TopologySummary {
    let c = components.len() as u64;
    let beta1: u64 = components.iter().map(|comp| 2 * comp.genus).sum();
    let scene_betti = (c, beta1, c);
    let scene_chi = scene_betti.0 as i64 - scene_betti.1 as i64 + scene_betti.2 as i64;
    TopologySummary {
        components,
        scene_betti,
        scene_chi,
    }
}

/// True when two scenes have identical Betti triples but different genus
/// multisets: the configurations persistent homology cannot tell apart while
/// per-object labels can.
pub fn ambiguity_witness(a: &TopologySummary, b: &TopologySummary) -> bool {
    a.scene_betti == b.scene_betti && a.genus_multiset() != b.genus_multiset()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    fn genus_component(genus: u64) -> ComponentTopology {
        ComponentTopology {
            genus,
            chi: 2 - 2 * genus as i64,
            vertex_count: 0,
            edge_count: 0,
            face_count: 0,
        }
    }

    fn summary_of(genera: &[u64]) -> TopologySummary {
        summary_from_components(genera.iter().map(|&g| genus_component(g)).collect())
    }

    #[test]
    fn sphere_and_torus_genera() {
        assert_eq!(genus_of_component(&shapes::uv_sphere(6, 8, 1.0)).unwrap(), 0);
        assert_eq!(genus_of_component(&shapes::torus(6, 9, 2.0, 0.5)).unwrap(), 1);
    }

    #[test]
    fn open_mesh_is_rejected() {
        let tri = TriangleMesh::new(
            vec![
                crate::mesh::Vec3::zeros(),
                crate::mesh::Vec3::x(),
                crate::mesh::Vec3::y(),
            ],
            vec![[0, 1, 2]],
        );
        assert!(matches!(
            genus_of_component(&tri),
            Err(TopologyError::NotClosed)
        ));
    }

    #[test]
    fn multi_component_is_rejected_with_index() {
        let a = shapes::triangulated_cube(1.0);
        let b = shapes::triangulated_cube(1.0).translated(crate::mesh::Vec3::new(4.0, 0.0, 0.0));
        let union = TriangleMesh::union(&[(&a, 0), (&b, 1)]);
        assert!(matches!(
            genus_of_component(&union),
            Err(TopologyError::MultiComponent(2))
        ));
        let summary = scene_summary(&[a, union]);
        match summary {
            Err(TopologyError::Object { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected object error, got {other:?}"),
        }
    }

    #[test]
    fn fig_style_scene_betti() {
        // {torus, 2-holed torus} -> (2, 6, 2); {sphere, 3-holed torus} same.
        let a = summary_of(&[1, 2]);
        assert_eq!(a.scene_betti, (2, 6, 2));
        assert_eq!(a.scene_chi, -2);
        let b = summary_of(&[0, 3]);
        assert_eq!(b.scene_betti, (2, 6, 2));
        assert!(ambiguity_witness(&a, &b));
        assert!(ambiguity_witness(&b, &a));
    }

    #[test]
    fn single_sphere_betti() {
        let s = summary_of(&[0]);
        assert_eq!(s.scene_betti, (1, 0, 1));
        assert_eq!(s.scene_chi, 2);
    }

    #[test]
    fn witness_needs_equal_betti_and_unequal_genera() {
        assert!(!ambiguity_witness(&summary_of(&[1, 2]), &summary_of(&[1, 2])));
        assert!(!ambiguity_witness(&summary_of(&[0]), &summary_of(&[1])));
    }

    #[test]
    fn scene_chi_equals_sum_of_component_chi() {
        for genera in [vec![0], vec![1, 2], vec![0, 3], vec![2, 2, 1]] {
            let s = summary_of(&genera);
            let sum: i64 = s.components.iter().map(|c| c.chi).sum();
            assert_eq!(s.scene_chi, sum);
        }
    }
}
