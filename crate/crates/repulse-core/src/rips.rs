//! Desk-scale Vietoris-Rips persistent homology: beta_0 and beta_1 barcodes
//! on small point clouds via standard boundary-matrix column reduction over
//! the two-element field.
//!
//! The filtration includes simplices up to dimension 2 whose diameter stays
//! below the radius cap; a simplex is born at its largest pairwise distance.
//! A size guard (default 400 points, overridable) keeps runs at desk scale:
//! correctness here beats speed, the reduction is the plain algorithm with
//! no clearing optimizations.

use crate::mesh::Vec3;
use serde::Serialize;
use std::collections::HashMap;
use std::io::Write;
use thiserror::Error;

/// Default point-count guard for [`build_rips`].
pub const DEFAULT_MAX_POINTS: usize = 400;

#[derive(Debug, Error)]
pub enum RipsError {
    #[error(
        "point cloud of {count} exceeds the desk-scale guard of {max}; \
         subsample the cloud or raise the guard explicitly"
    )]
    TooManyPoints { count: usize, max: usize },
}

/// One simplex of the filtration: sorted vertex ids plus birth radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simplex {
    pub vertices: Vec<usize>,
    pub birth: f64,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Simplices sorted by (birth, dimension, lexicographic vertices), so every
/// face precedes its cofaces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Filtration {
    pub simplices: Vec<Simplex>,
}

/// A persistence interval; `death` is `f64::INFINITY` for essential classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub birth: f64,
    pub death: f64,
}

impl Interval {
    pub fn is_infinite(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn contains(&self, radius: f64) -> bool {
        self.birth <= radius && radius < self.death
    }
}

/// Persistence intervals for dimensions 0 and 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Barcode {
    pub dim0: Vec<Interval>,
    pub dim1: Vec<Interval>,
}

impl Barcode {
    pub fn intervals(&self, dim: usize) -> &[Interval] {
        match dim {
            0 => &self.dim0,
            1 => &self.dim1,
            _ => &[],
        }
    }
}

/// Builds the Rips filtration with the default desk-scale guard and
/// simplices up to dimension 2.
pub fn build_rips(points: &[Vec3], max_radius: f64) -> Result<Filtration, RipsError> {
    build_rips_guarded(points, max_radius, 2, DEFAULT_MAX_POINTS)
}

/// [`build_rips`] with explicit dimension cap and point-count guard.
pub fn build_rips_guarded(
    points: &[Vec3],
    max_radius: f64,
    max_dim: usize,
    max_points: usize,
) -> Result<Filtration, RipsError> {
    if points.len() > max_points {
        return Err(RipsError::TooManyPoints {
            count: points.len(),
            max: max_points,
        });
    }
    let n = points.len();
    let dist = |i: usize, j: usize| (points[i] - points[j]).norm();
    let mut simplices: Vec<Simplex> = Vec::with_capacity(n * 4);
    for i in 0..n {
        simplices.push(Simplex {
            vertices: vec![i],
            birth: 0.0,
        });
    }
    if max_dim >= 1 {
        // Neighbor lists keep the triangle scan near-linear in its output.
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                let d = dist(i, j);
                if d <= max_radius {
                    simplices.push(Simplex {
                        vertices: vec![i, j],
                        birth: d,
                    });
                    neighbors[i].push(j);
                }
            }
        }
        if max_dim >= 2 {
            for i in 0..n {
                for (a, &j) in neighbors[i].iter().enumerate() {
                    for &k in &neighbors[i][a + 1..] {
                        let djk = dist(j, k);
                        if djk <= max_radius {
                            let birth = dist(i, j).max(dist(i, k)).max(djk);
                            simplices.push(Simplex {
                                vertices: vec![i, j, k],
                                birth,
                            });
                        }
                    }
                }
            }
        }
    }
    simplices.sort_by(|a, b| {
        a.birth
            .total_cmp(&b.birth)
            .then(a.vertices.len().cmp(&b.vertices.len()))
            .then(a.vertices.cmp(&b.vertices))
    });
    Ok(Filtration { simplices })
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Standard column reduction over GF(2). Zero-length intervals are
/// discarded; infinite dim-0 bars count the components at the radius cap.
pub fn persistence(filtration: &Filtration) -> Barcode {
    let m = filtration.simplices.len();
    let mut position: HashMap<&[usize], usize> = HashMap::with_capacity(m);
    for (idx, s) in filtration.simplices.iter().enumerate() {
        position.insert(s.vertices.as_slice(), idx);
    }
    // Reduced columns, pivot (lowest row) -> column index.
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(m);
    let mut pivot_of: HashMap<usize, usize> = HashMap::with_capacity(m);
    // paired[i] = true when simplex i's class has died (or i kills).
    let mut killed: Vec<bool> = vec![false; m];
    let mut intervals: [Vec<Interval>; 3] = [Vec::new(), Vec::new(), Vec::new()];

    for (j, s) in filtration.simplices.iter().enumerate() {
        let mut column: Vec<usize> = if s.vertices.len() == 1 {
            Vec::new()
        } else {
            let mut faces = Vec::with_capacity(s.vertices.len());
            for drop in 0..s.vertices.len() {
                let face: Vec<usize> = s
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != drop)
                    .map(|(_, &v)| v)
                    .collect();
                faces.push(position[&face[..]]);
            }
            faces.sort_unstable();
            faces
        };
        while let Some(&low) = column.last() {
            match pivot_of.get(&low) {
                Some(&other) => column = symmetric_difference(&column, &columns[other]),
                None => break,
            }
        }
        if let Some(&low) = column.last() {
            // j kills the class born at `low`.
            pivot_of.insert(low, j);
            killed[low] = true;
            killed[j] = true;
            let birth = filtration.simplices[low].birth;
            let death = s.birth;
            if death > birth {
                intervals[filtration.simplices[low].dim()].push(Interval { birth, death });
            }
        }
        columns.push(column);
    }
    // Unkilled creators are essential.
    for (i, s) in filtration.simplices.iter().enumerate() {
        let creates = columns[i].is_empty();
        if creates && !killed[i] && s.dim() <= 1 {
            intervals[s.dim()].push(Interval {
                birth: s.birth,
                death: f64::INFINITY,
            });
        }
    }
    let sort = |v: &mut Vec<Interval>| {
        v.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
    };
    let mut barcode = Barcode {
        dim0: std::mem::take(&mut intervals[0]),
        dim1: std::mem::take(&mut intervals[1]),
    };
    sort(&mut barcode.dim0);
    sort(&mut barcode.dim1);
    barcode
}

/// Betti numbers at a radius: intervals are half-open `[birth, death)`.
pub fn betti_at(barcode: &Barcode, radius: f64) -> (usize, usize) {
    let count = |v: &[Interval]| v.iter().filter(|i| i.contains(radius)).count();
    (count(&barcode.dim0), count(&barcode.dim1))
}

/// Sorted distinct birth/death radii of the barcode (plus zero), the places
/// where Betti numbers can change.
pub fn critical_radii(barcode: &Barcode) -> Vec<f64> {
    let mut out = vec![0.0];
    for iv in barcode.dim0.iter().chain(&barcode.dim1) {
        out.push(iv.birth);
        if iv.death.is_finite() {
            out.push(iv.death);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Betti curve sampled at the given radii.
pub fn betti_curve(barcode: &Barcode, radii: &[f64]) -> Vec<(f64, usize, usize)> {
    radii
        .iter()
        .map(|&r| {
            let (b0, b1) = betti_at(barcode, r);
            (r, b0, b1)
        })
        .collect()
}

/// Barcode CSV: `dim,birth,death` with `inf` for essential classes.
pub fn write_barcode_csv<W: Write>(barcode: &Barcode, mut out: W) -> std::io::Result<()> {
    writeln!(out, "dim,birth,death")?;
    for (dim, intervals) in [(0usize, &barcode.dim0), (1, &barcode.dim1)] {
        for iv in intervals {
            if iv.death.is_finite() {
                writeln!(out, "{},{:.8e},{:.8e}", dim, iv.birth, iv.death)?;
            } else {
                writeln!(out, "{},{:.8e},inf", dim, iv.birth)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[[f64; 3]]) -> Vec<Vec3> {
        coords.iter().map(|c| Vec3::new(c[0], c[1], c[2])).collect()
    }

    /// Independent oracle: beta_0 via union-find on the distance graph.
    fn union_find_beta0(points: &[Vec3], radius: f64) -> usize {
        let n = points.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for i in 0..n {
            for j in i + 1..n {
                if (points[i] - points[j]).norm() <= radius {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        (0..n)
            .filter(|&i| find(&mut parent, i) == i)
            .count()
    }

    /// Independent oracle: Betti numbers by dense GF(2) rank computation of
    /// the full boundary matrices at a fixed radius.
    fn rank_oracle_betti(points: &[Vec3], radius: f64) -> (usize, usize) {
        let n = points.len();
        let dist = |i: usize, j: usize| (points[i] - points[j]).norm();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if dist(i, j) <= radius {
                    edges.push((i, j));
                }
            }
        }
        let mut triangles = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    if dist(i, j) <= radius && dist(i, k) <= radius && dist(j, k) <= radius {
                        triangles.push((i, j, k));
                    }
                }
            }
        }
        let edge_index: HashMap<(usize, usize), usize> = edges
            .iter()
            .enumerate()
            .map(|(idx, &e)| (e, idx))
            .collect();
        // Dense GF(2) rank with u64-packed rows.
        let rank = |rows: Vec<Vec<u64>>, width: usize| -> usize {
            let mut rows = rows;
            let mut rank = 0;
            for col in 0..width {
                let (word, bit) = (col / 64, col % 64);
                let Some(pivot) = (rank..rows.len())
                    .find(|&r| rows[r][word] >> bit & 1 == 1)
                else {
                    continue;
                };
                rows.swap(rank, pivot);
                for r in 0..rows.len() {
                    if r != rank && rows[r][word] >> bit & 1 == 1 {
                        let (a, b) = if r < rank {
                            let (lo, hi) = rows.split_at_mut(rank);
                            (&mut lo[r], &hi[0])
                        } else {
                            let (lo, hi) = rows.split_at_mut(r);
                            (&mut hi[0], &lo[rank])
                        };
                        for (x, y) in a.iter_mut().zip(b.iter()) {
                            *x ^= *y;
                        }
                    }
                }
                rank += 1;
            }
            rank
        };
        let words = n.div_ceil(64);
        let d1: Vec<Vec<u64>> = edges
            .iter()
            .map(|&(i, j)| {
                let mut row = vec![0u64; words];
                row[i / 64] |= 1 << (i % 64);
                row[j / 64] |= 1 << (j % 64);
                row
            })
            .collect();
        let e_words = edges.len().max(1).div_ceil(64);
        let d2: Vec<Vec<u64>> = triangles
            .iter()
            .map(|&(i, j, k)| {
                let mut row = vec![0u64; e_words];
                for e in [(i, j), (i, k), (j, k)] {
                    let idx = edge_index[&e];
                    row[idx / 64] |= 1 << (idx % 64);
                }
                row
            })
            .collect();
        let rank_d1 = rank(d1, n);
        let rank_d2 = rank(d2, edges.len().max(1));
        let beta0 = n - rank_d1;
        let beta1 = edges.len() - rank_d1 - rank_d2;
        (beta0, beta1)
    }

    #[test]
    fn far_points_stay_vertices() {
        let p = pts(&[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.0, 10.0, 0.0]]);
        let f = build_rips(&p, 1.0).unwrap();
        assert_eq!(f.simplices.len(), 3);
        let barcode = persistence(&f);
        assert_eq!(barcode.dim0.len(), 3);
        assert!(barcode.dim0.iter().all(Interval::is_infinite));
        assert_eq!(betti_at(&barcode, 0.0), (3, 0));
    }

    #[test]
    fn tight_triangle_fills_at_its_diameter() {
        let p = pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.8, 0.0]]);
        let f = build_rips(&p, 1.0).unwrap();
        // 3 vertices + 3 edges + 1 triangle.
        assert_eq!(f.simplices.len(), 7);
        assert_eq!(f.simplices.last().unwrap().vertices.len(), 3);
        // Triangle born at the longest edge (Rips rule).
        assert_eq!(f.simplices.last().unwrap().birth, 1.0);
    }

    #[test]
    fn simplex_count_matches_brute_force() {
        let mut rng = crate::rng::rng_for(3, crate::rng::Stream::Sampling, 0);
        use rand::Rng;
        let points: Vec<Vec3> = (0..20)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let radius = 0.9;
        let f = build_rips(&points, radius).unwrap();
        // Brute-force enumeration as the oracle.
        let n = points.len();
        let dist = |i: usize, j: usize| (points[i] - points[j]).norm();
        let mut expected = n;
        for i in 0..n {
            for j in i + 1..n {
                if dist(i, j) <= radius {
                    expected += 1;
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    if dist(i, j) <= radius && dist(i, k) <= radius && dist(j, k) <= radius {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(f.simplices.len(), expected);
        // Faces precede cofaces and births follow the Rips rule.
        for (idx, s) in f.simplices.iter().enumerate() {
            if s.vertices.len() > 1 {
                let max_pair = {
                    let v = &s.vertices;
                    let mut m = 0.0f64;
                    for a in 0..v.len() {
                        for b in a + 1..v.len() {
                            m = m.max(dist(v[a], v[b]));
                        }
                    }
                    m
                };
                assert_eq!(s.birth, max_pair);
            }
            for other in &f.simplices[..idx] {
                assert!(other.birth <= s.birth);
            }
        }
    }

    #[test]
    fn octagon_has_one_loop() {
        let points: Vec<Vec3> = (0..8)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 8.0;
                Vec3::new(a.cos(), a.sin(), 0.0)
            })
            .collect();
        let f = build_rips(&points, 2.1).unwrap();
        let barcode = persistence(&f);
        assert_eq!(barcode.dim1.len(), 1, "dim-1 bars: {:?}", barcode.dim1);
        let bar = barcode.dim1[0];
        let edge = 2.0 * (std::f64::consts::PI / 8.0).sin();
        assert!((bar.birth - edge).abs() < 1e-12, "birth {}", bar.birth);
        assert!(bar.death.is_finite());
        // The death radius must match the rank oracle's Betti curve.
        let radii: Vec<f64> = {
            let mut r: Vec<f64> = f.simplices.iter().map(|s| s.birth).collect();
            r.sort_by(f64::total_cmp);
            r.dedup();
            r
        };
        for &r in &radii {
            let oracle = rank_oracle_betti(&points, r);
            assert_eq!(
                betti_at(&barcode, r),
                oracle,
                "betti mismatch at radius {r}"
            );
        }
        // One infinite component bar.
        let infinite = barcode.dim0.iter().filter(|i| i.is_infinite()).count();
        assert_eq!(infinite, 1);
    }

    #[test]
    fn two_far_clusters_give_two_infinite_bars() {
        let mut points = Vec::new();
        for i in 0..5 {
            points.push(Vec3::new(0.1 * i as f64, 0.0, 0.0));
            points.push(Vec3::new(100.0 + 0.1 * i as f64, 0.0, 0.0));
        }
        let f = build_rips(&points, 2.0).unwrap();
        let barcode = persistence(&f);
        let infinite = barcode.dim0.iter().filter(|i| i.is_infinite()).count();
        assert_eq!(infinite, 2);
    }

    #[test]
    fn beta0_matches_union_find_on_random_instances() {
        use rand::Rng;
        for seed in 0..40u64 {
            let mut rng = crate::rng::rng_for(seed, crate::rng::Stream::Sampling, 1);
            let n = rng.gen_range(5..=50);
            let points: Vec<Vec3> = (0..n)
                .map(|_| {
                    Vec3::new(
                        rng.gen_range(0.0..4.0),
                        rng.gen_range(0.0..4.0),
                        rng.gen_range(0.0..4.0),
                    )
                })
                .collect();
            let radius = rng.gen_range(0.3..1.5);
            let f = build_rips(&points, radius).unwrap();
            let barcode = persistence(&f);
            let (b0, _) = betti_at(&barcode, radius);
            assert_eq!(
                b0,
                union_find_beta0(&points, radius),
                "seed {seed}, n {n}, radius {radius}"
            );
        }
    }

    #[test]
    fn dim0_bars_only_merge() {
        // Alive dim-0 count is monotone non-increasing in the radius.
        use rand::Rng;
        let mut rng = crate::rng::rng_for(9, crate::rng::Stream::Sampling, 2);
        let points: Vec<Vec3> = (0..30)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(0.0..3.0),
                    rng.gen_range(0.0..3.0),
                    rng.gen_range(0.0..3.0),
                )
            })
            .collect();
        let f = build_rips(&points, 2.0).unwrap();
        let barcode = persistence(&f);
        let radii = critical_radii(&barcode);
        let mut last = usize::MAX;
        for &r in &radii {
            let (b0, _) = betti_at(&barcode, r);
            assert!(b0 <= last);
            last = b0;
        }
    }

    #[test]
    fn size_guard_refuses_large_clouds() {
        let points = vec![Vec3::zeros(); 401];
        match build_rips(&points, 1.0) {
            Err(RipsError::TooManyPoints { count: 401, max: 400 }) => {}
            other => panic!("expected size guard, got {other:?}"),
        }
        // Overridable.
        assert!(build_rips_guarded(&points, 0.0, 2, 500).is_ok());
    }

    #[test]
    fn barcode_csv_shape() {
        let p = pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let f = build_rips(&p, 2.0).unwrap();
        let barcode = persistence(&f);
        let mut buf = Vec::new();
        write_barcode_csv(&barcode, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("dim,birth,death\n"));
        assert!(text.contains(",inf"));
    }
}
