//! Parametric test fixtures: cube, sphere, torus. Dataset seeds come from
//! [`crate::seeds`]; these exist for tests, benches, and demos where an exact
//! closed mesh of known shape is wanted.

use super::{TriangleMesh, Vec3};

/// Axis-aligned cube surface centered at the origin, 12 triangles.
pub fn triangulated_cube(edge: f64) -> TriangleMesh {
    let h = edge / 2.0;
    let vertices = vec![
        Vec3::new(-h, -h, -h),
        Vec3::new(h, -h, -h),
        Vec3::new(h, h, -h),
        Vec3::new(-h, h, -h),
        Vec3::new(-h, -h, h),
        Vec3::new(h, -h, h),
        Vec3::new(h, h, h),
        Vec3::new(-h, h, h),
    ];
    // Quads wound outward, split along a fixed diagonal.
    let quads = [
        [0, 3, 2, 1], // -z
        [4, 5, 6, 7], // +z
        [0, 1, 5, 4], // -y
        [2, 3, 7, 6], // +y
        [1, 2, 6, 5], // +x
        [3, 0, 4, 7], // -x
    ];
    let mut triangles = Vec::with_capacity(12);
    for q in quads {
        triangles.push([q[0], q[1], q[2]]);
        triangles.push([q[0], q[2], q[3]]);
    }
    TriangleMesh::new(vertices, triangles)
}

/// UV sphere with `stacks >= 2` latitude bands and `slices >= 3` longitudes.
pub fn uv_sphere(stacks: usize, slices: usize, radius: f64) -> TriangleMesh {
    assert!(stacks >= 2 && slices >= 3);
    let mut vertices = vec![Vec3::new(0.0, 0.0, radius)];
    for i in 1..stacks {
        let phi = std::f64::consts::PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let theta = std::f64::consts::TAU * j as f64 / slices as f64;
            vertices.push(Vec3::new(
                radius * phi.sin() * theta.cos(),
                radius * phi.sin() * theta.sin(),
                radius * phi.cos(),
            ));
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, -radius));
    let south = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * slices + (j % slices);

    let mut triangles = Vec::new();
    for j in 0..slices {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
            triangles.push([a, c, d]);
            triangles.push([a, d, b]);
        }
    }
    for j in 0..slices {
        triangles.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    TriangleMesh::new(vertices, triangles)
}

/// Torus around the z axis: `major` radius to the tube center, `minor` tube
/// radius, on an `nu x nv` grid (`nu` around the tube, `nv` around the axis).
/// Vertex count is exactly `nu * nv`.
pub fn torus(nu: usize, nv: usize, major: f64, minor: f64) -> TriangleMesh {
    assert!(nu >= 3 && nv >= 3);
    let mut vertices = Vec::with_capacity(nu * nv);
    for v in 0..nv {
        let theta = std::f64::consts::TAU * v as f64 / nv as f64;
        for u in 0..nu {
            let phi = std::f64::consts::TAU * u as f64 / nu as f64;
            let r = major + minor * phi.cos();
            vertices.push(Vec3::new(
                r * theta.cos(),
                r * theta.sin(),
                minor * phi.sin(),
            ));
        }
    }
    let at = |v: usize, u: usize| (v % nv) * nu + (u % nu);
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    for v in 0..nv {
        for u in 0..nu {
            let (a, b) = (at(v, u), at(v, u + 1));
            let (c, d) = (at(v + 1, u), at(v + 1, u + 1));
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}
