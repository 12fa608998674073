//! Self-intersection detection: exact triangle-triangle tests accelerated by
//! an axis-aligned bounding-volume hierarchy.
//!
//! Pairs sharing at least one vertex are excluded (shared-vertex contact is
//! adjacency, not interpenetration). The BVH result is the exact same set as
//! brute-force all-pairs testing; tests enforce this.

use super::{TriangleMesh, Vec3};

/// Geometric tolerance of the intersection predicate, in scene units.
/// Distances below this count as contact. False positives are safe for the
/// growth loop (it rolls back), so the predicate leans inclusive.
pub const INTERSECT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn of_triangle(points: &[Vec3; 3]) -> Self {
        let lo = points[0].inf(&points[1]).inf(&points[2]);
        let hi = points[0].sup(&points[1]).sup(&points[2]);
        Aabb { lo, hi }
    }

    fn merged(&self, other: &Aabb) -> Aabb {
        Aabb {
            lo: self.lo.inf(&other.lo),
            hi: self.hi.sup(&other.hi),
        }
    }

    fn overlaps(&self, other: &Aabb, pad: f64) -> bool {
        (0..3).all(|k| self.lo[k] - pad <= other.hi[k] && other.lo[k] - pad <= self.hi[k])
    }

    fn longest_axis(&self) -> usize {
        let d = self.hi - self.lo;
        if d.x >= d.y && d.x >= d.z {
            0
        } else if d.y >= d.z {
            1
        } else {
            2
        }
    }
}

enum Node {
    Leaf {
        bounds: Aabb,
        start: usize,
        count: usize,
    },
    Inner {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
}

/// Median-split AABB tree over triangles. Build and traversal order are
/// deterministic.
pub struct Bvh {
    nodes: Vec<Node>,
    /// Triangle indices in tree order; leaves reference ranges of this list.
    order: Vec<usize>,
    root: usize,
}

const LEAF_SIZE: usize = 4;

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let n = mesh.triangle_count();
        let boxes: Vec<Aabb> = (0..n)
            .map(|t| Aabb::of_triangle(&mesh.triangle_points(t)))
            .collect();
        let centroids: Vec<Vec3> = boxes.iter().map(|b| (b.lo + b.hi) * 0.5).collect();
        let mut order: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::new();
        let root = if n == 0 {
            usize::MAX
        } else {
            Self::build_range(&mut nodes, &mut order, 0, n, &boxes, &centroids)
        };
        Bvh { nodes, order, root }
    }

    fn build_range(
        nodes: &mut Vec<Node>,
        order: &mut [usize],
        start: usize,
        count: usize,
        boxes: &[Aabb],
        centroids: &[Vec3],
    ) -> usize {
        let slice = &mut order[start..start + count];
        let mut bounds = boxes[slice[0]];
        for &t in slice.iter().skip(1) {
            bounds = bounds.merged(&boxes[t]);
        }
        if count <= LEAF_SIZE {
            nodes.push(Node::Leaf {
                bounds,
                start,
                count,
            });
            return nodes.len() - 1;
        }
        let mut cbounds = Aabb {
            lo: centroids[slice[0]],
            hi: centroids[slice[0]],
        };
        for &t in slice.iter().skip(1) {
            cbounds.lo = cbounds.lo.inf(&centroids[t]);
            cbounds.hi = cbounds.hi.sup(&centroids[t]);
        }
        let axis = cbounds.longest_axis();
        slice.sort_unstable_by(|&a, &b| {
            centroids[a][axis]
                .total_cmp(&centroids[b][axis])
                .then(a.cmp(&b))
        });
        let half = count / 2;
        let left = Self::build_range(nodes, order, start, half, boxes, centroids);
        let right = Self::build_range(nodes, order, start + half, count - half, boxes, centroids);
        nodes.push(Node::Inner {
            bounds,
            left,
            right,
        });
        nodes.len() - 1
    }

    /// Triangle indices whose padded AABB overlaps `query`, in deterministic
    /// traversal order.
    fn query(&self, query: &Aabb, pad: f64, out: &mut Vec<usize>) {
        if self.root == usize::MAX {
            return;
        }
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            match &self.nodes[id] {
                Node::Leaf {
                    bounds,
                    start,
                    count,
                } => {
                    if bounds.overlaps(query, pad) {
                        out.extend_from_slice(&self.order[*start..*start + *count]);
                    }
                }
                Node::Inner {
                    bounds,
                    left,
                    right,
                } => {
                    if bounds.overlaps(query, pad) {
                        stack.push(*right);
                        stack.push(*left);
                    }
                }
            }
        }
    }
}

fn shares_vertex(a: [usize; 3], b: [usize; 3]) -> bool {
    a.iter().any(|v| b.contains(v))
}

fn candidate_hits(mesh: &TriangleMesh, bvh: &Bvh, t: usize) -> Vec<(usize, usize)> {
    let pts = mesh.triangle_points(t);
    let query = Aabb::of_triangle(&pts);
    let mut candidates = Vec::new();
    bvh.query(&query, INTERSECT_EPS, &mut candidates);
    let mut hits = Vec::new();
    for c in candidates {
        if c <= t || shares_vertex(mesh.triangles[t], mesh.triangles[c]) {
            continue;
        }
        let q = mesh.triangle_points(c);
        if triangles_intersect(&pts, &q) {
            hits.push((t, c));
        }
    }
    hits.sort_unstable();
    hits
}

/// All pairs of non-adjacent triangles whose closed triangles intersect,
/// sorted ascending. BVH-accelerated; identical set to brute force.
pub fn detect_self_intersections(mesh: &TriangleMesh) -> Vec<(usize, usize)> {
    let bvh = Bvh::build(mesh);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let per_triangle: Vec<Vec<(usize, usize)>> = (0..mesh.triangle_count())
            .into_par_iter()
            .map(|t| candidate_hits(mesh, &bvh, t))
            .collect();
        per_triangle.into_iter().flatten().collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        detect_with_bvh_seq(mesh, &bvh)
    }
}

/// Sequential variant of [`detect_self_intersections`]; same output.
pub fn detect_self_intersections_seq(mesh: &TriangleMesh) -> Vec<(usize, usize)> {
    let bvh = Bvh::build(mesh);
    detect_with_bvh_seq(mesh, &bvh)
}

fn detect_with_bvh_seq(mesh: &TriangleMesh, bvh: &Bvh) -> Vec<(usize, usize)> {
    (0..mesh.triangle_count())
        .flat_map(|t| candidate_hits(mesh, bvh, t))
        .collect()
}

/// Exact (epsilon-guarded) triangle-triangle intersection test for closed
/// triangles, interval method with a coplanar fallback.
pub fn triangles_intersect(t1: &[Vec3; 3], t2: &[Vec3; 3]) -> bool {
    let n1 = (t1[1] - t1[0]).cross(&(t1[2] - t1[0]));
    let n2 = (t2[1] - t2[0]).cross(&(t2[2] - t2[0]));

    // Signed distances, clamped to zero within a geometric tolerance.
    let clamp = |d: f64, scale: f64| if d.abs() <= INTERSECT_EPS * scale { 0.0 } else { d };
    let s1 = n1.norm();
    let s2 = n2.norm();
    if s1 == 0.0 || s2 == 0.0 {
        // Degenerate input; fall back to a conservative AABB verdict.
        return Aabb::of_triangle(t1).overlaps(&Aabb::of_triangle(t2), INTERSECT_EPS);
    }

    let d2 = -n2.dot(&t2[0]);
    let dv: [f64; 3] = [
        clamp(n2.dot(&t1[0]) + d2, s2),
        clamp(n2.dot(&t1[1]) + d2, s2),
        clamp(n2.dot(&t1[2]) + d2, s2),
    ];
    if dv.iter().all(|&d| d > 0.0) || dv.iter().all(|&d| d < 0.0) {
        return false;
    }

    let d1 = -n1.dot(&t1[0]);
    let du: [f64; 3] = [
        clamp(n1.dot(&t2[0]) + d1, s1),
        clamp(n1.dot(&t2[1]) + d1, s1),
        clamp(n1.dot(&t2[2]) + d1, s1),
    ];
    if du.iter().all(|&d| d > 0.0) || du.iter().all(|&d| d < 0.0) {
        return false;
    }

    if dv.iter().all(|&d| d == 0.0) {
        return coplanar_intersect(t1, t2, &n1);
    }

    // Project onto the dominant axis of the intersection line direction.
    let dir = n1.cross(&n2);
    let axis = {
        let a = dir.map(f64::abs);
        if a.x >= a.y && a.x >= a.z {
            0
        } else if a.y >= a.z {
            1
        } else {
            2
        }
    };
    let p1: [f64; 3] = [t1[0][axis], t1[1][axis], t1[2][axis]];
    let p2: [f64; 3] = [t2[0][axis], t2[1][axis], t2[2][axis]];

    let i1 = match interval(&p1, &dv) {
        Some(i) => i,
        None => return coplanar_intersect(t1, t2, &n1),
    };
    let i2 = match interval(&p2, &du) {
        Some(i) => i,
        None => return coplanar_intersect(t1, t2, &n1),
    };
    i1.0.max(i2.0) <= i1.1.min(i2.1) + INTERSECT_EPS
}

/// Projection interval of a triangle's crossing segment with the other
/// triangle's plane. `None` means the distances degenerate to coplanarity.
fn interval(proj: &[f64; 3], dist: &[f64; 3]) -> Option<(f64, f64)> {
    // Choose the vertex on its own side (or the plane) versus the two others.
    let arrangements = [(0, 1, 2), (1, 0, 2), (2, 0, 1)];
    for (lone, a, b) in arrangements {
        let dl = dist[lone];
        let (da, db) = (dist[a], dist[b]);
        let opposite =
            (dl > 0.0 && da <= 0.0 && db <= 0.0) || (dl < 0.0 && da >= 0.0 && db >= 0.0);
        if opposite {
            let cross = |i: usize, j: usize| {
                proj[i] + (proj[j] - proj[i]) * dist[i] / (dist[i] - dist[j])
            };
            let x = cross(lone, a);
            let y = cross(lone, b);
            return Some((x.min(y), x.max(y)));
        }
    }
    // Cases with vertices in the plane (zeros) and the rest on one side.
    let zeros: Vec<usize> = (0..3).filter(|&i| dist[i] == 0.0).collect();
    match zeros.len() {
        1 => Some((proj[zeros[0]], proj[zeros[0]])),
        2 => {
            let (x, y) = (proj[zeros[0]], proj[zeros[1]]);
            Some((x.min(y), x.max(y)))
        }
        _ => None,
    }
}

/// Coplanar case: project to the dominant plane of the normal and test for
/// 2D overlap (edge crossings or containment).
fn coplanar_intersect(t1: &[Vec3; 3], t2: &[Vec3; 3], normal: &Vec3) -> bool {
    let a = normal.map(f64::abs);
    let (i, j) = if a.x >= a.y && a.x >= a.z {
        (1, 2)
    } else if a.y >= a.z {
        (0, 2)
    } else {
        (0, 1)
    };
    let q1: [[f64; 2]; 3] = [
        [t1[0][i], t1[0][j]],
        [t1[1][i], t1[1][j]],
        [t1[2][i], t1[2][j]],
    ];
    let q2: [[f64; 2]; 3] = [
        [t2[0][i], t2[0][j]],
        [t2[1][i], t2[1][j]],
        [t2[2][i], t2[2][j]],
    ];
    for e1 in 0..3 {
        for e2 in 0..3 {
            if segments_intersect_2d(q1[e1], q1[(e1 + 1) % 3], q2[e2], q2[(e2 + 1) % 3]) {
                return true;
            }
        }
    }
    point_in_triangle_2d(q1[0], &q2) || point_in_triangle_2d(q2[0], &q1)
}

fn orient_2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    if v.abs() <= INTERSECT_EPS {
        0.0
    } else {
        v
    }
}

fn segments_intersect_2d(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient_2d(q1, q2, p1);
    let d2 = orient_2d(q1, q2, p2);
    let d3 = orient_2d(p1, p2, q1);
    let d4 = orient_2d(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |d: f64, a: [f64; 2], b: [f64; 2], p: [f64; 2]| {
        d == 0.0
            && p[0] >= a[0].min(b[0]) - INTERSECT_EPS
            && p[0] <= a[0].max(b[0]) + INTERSECT_EPS
            && p[1] >= a[1].min(b[1]) - INTERSECT_EPS
            && p[1] <= a[1].max(b[1]) + INTERSECT_EPS
    };
    on(d1, q1, q2, p1) || on(d2, q1, q2, p2) || on(d3, p1, p2, q1) || on(d4, p1, p2, q2)
}

fn point_in_triangle_2d(p: [f64; 2], tri: &[[f64; 2]; 3]) -> bool {
    let d1 = orient_2d(tri[0], tri[1], p);
    let d2 = orient_2d(tri[1], tri[2], p);
    let d3 = orient_2d(tri[2], tri[0], p);
    let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(has_neg && has_pos)
}
