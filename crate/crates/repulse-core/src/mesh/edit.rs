//! Topology-safe local edits: interior edge split and link-condition-guarded
//! edge collapse. Both preserve the Euler characteristic exactly; collapse
//! additionally refuses any edit that would degenerate or flip triangles.

use super::{MeshError, TriangleMesh, DEGENERATE_SQ_AREA};
use std::collections::BTreeSet;
use thiserror::Error;

/// Why an edge collapse was refused. The caller keeps the old mesh.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CollapseRejection {
    #[error("edge is not interior to a closed region (incident triangles != 2)")]
    NotInterior,
    #[error("link condition failed: collapse would change topology")]
    LinkCondition,
    #[error("collapse would produce a degenerate triangle")]
    Degenerate,
    #[error("collapse would flip a triangle normal")]
    Flipped,
}

fn incident_triangles(mesh: &TriangleMesh, u: usize, v: usize) -> Vec<usize> {
    mesh.triangles
        .iter()
        .enumerate()
        .filter(|(_, t)| t.contains(&u) && t.contains(&v))
        .map(|(i, _)| i)
        .collect()
}

/// Splits interior edge `(u, v)` at its midpoint: V+1, E+3, F+2, same Euler
/// characteristic, winding preserved.
pub fn edge_split(mesh: &TriangleMesh, edge: (usize, usize)) -> Result<TriangleMesh, MeshError> {
    let (u, v) = edge;
    let incident = incident_triangles(mesh, u, v);
    if incident.len() != 2 {
        return Err(MeshError::UnsupportedEdit(u, v));
    }
    let mut out = mesh.clone();
    let mid = (mesh.vertices[u] + mesh.vertices[v]) * 0.5;
    out.vertices.push(mid);
    let m = out.vertices.len() - 1;
    for &t in &incident {
        let tri = out.triangles[t];
        // Rotate so the split edge is (tri[0], tri[1]) in winding order.
        let rot = (0..3)
            .find(|&k| {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                (a == u && b == v) || (a == v && b == u)
            })
            .expect("incident triangle contains the edge");
        let a = tri[rot];
        let b = tri[(rot + 1) % 3];
        let w = tri[(rot + 2) % 3];
        out.triangles[t] = [a, m, w];
        out.triangles.push([m, b, w]);
        if let Some(ids) = out.object_ids.as_mut() {
            let id = ids[t];
            ids.push(id);
        }
    }
    Ok(out)
}

fn link_vertices(mesh: &TriangleMesh, v: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for t in &mesh.triangles {
        if t.contains(&v) {
            out.extend(t.iter().copied().filter(|&w| w != v));
        }
    }
    out
}

fn link_edges(mesh: &TriangleMesh, v: usize) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for t in &mesh.triangles {
        if let Some(k) = (0..3).find(|&k| t[k] == v) {
            let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
            out.insert((a.min(b), a.max(b)));
        }
    }
    out
}

/// Collapses interior edge `(u, v)` to its midpoint when the link condition
/// holds and no triangle degenerates or flips: V-1, E-3, F-2, same Euler
/// characteristic.
pub fn edge_collapse(
    mesh: &TriangleMesh,
    edge: (usize, usize),
) -> Result<TriangleMesh, CollapseRejection> {
    let (u, v) = edge;
    let incident = incident_triangles(mesh, u, v);
    if incident.len() != 2 {
        return Err(CollapseRejection::NotInterior);
    }
    // Link condition: lk(u) n lk(v) must equal lk(uv), both as vertex sets
    // (exactly the two apexes) and edge sets (empty).
    let apexes: BTreeSet<usize> = incident
        .iter()
        .flat_map(|&t| mesh.triangles[t].iter().copied())
        .filter(|&w| w != u && w != v)
        .collect();
    let common_vertices: BTreeSet<usize> = link_vertices(mesh, u)
        .intersection(&link_vertices(mesh, v))
        .copied()
        .collect();
    if common_vertices != apexes {
        return Err(CollapseRejection::LinkCondition);
    }
    if link_edges(mesh, u).intersection(&link_edges(mesh, v)).next().is_some() {
        return Err(CollapseRejection::LinkCondition);
    }

    let midpoint = (mesh.vertices[u] + mesh.vertices[v]) * 0.5;
    let keep = u.min(v);
    let drop = u.max(v);

    let mut vertices = mesh.vertices.clone();
    vertices[keep] = midpoint;
    vertices.remove(drop);
    let remap = |w: usize| {
        let w = if w == drop { keep } else { w };
        if w > drop {
            w - 1
        } else {
            w
        }
    };

    let mut triangles = Vec::with_capacity(mesh.triangles.len() - 2);
    let mut object_ids = mesh.object_ids.as_ref().map(|_| Vec::new());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if incident.contains(&t) {
            continue;
        }
        let mapped = tri.map(remap);
        if tri.contains(&u) || tri.contains(&v) {
            // Modified triangle: guard area and orientation.
            let old_n = mesh.area_vector(t);
            let p = [
                vertices[mapped[0]],
                vertices[mapped[1]],
                vertices[mapped[2]],
            ];
            let new_n = (p[1] - p[0]).cross(&(p[2] - p[0])) * 0.5;
            if new_n.norm_squared() < DEGENERATE_SQ_AREA {
                return Err(CollapseRejection::Degenerate);
            }
            if new_n.dot(&old_n) <= 0.0 {
                return Err(CollapseRejection::Flipped);
            }
        }
        triangles.push(mapped);
        if let (Some(ids), Some(src)) = (object_ids.as_mut(), mesh.object_ids.as_ref()) {
            ids.push(src[t]);
        }
    }

    Ok(TriangleMesh {
        vertices,
        triangles,
        object_ids,
    })
}
