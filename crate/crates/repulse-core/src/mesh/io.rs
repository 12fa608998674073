//! Mesh I/O: ASCII OFF (counts header, vertex lines, face lines) and
//! Wavefront OBJ restricted to `v`/`f` records, with object ids carried as
//! `g object_<id>` group names.
//!
//! Floats are written in Rust's shortest-roundtrip form, so write/read is
//! exact and repeated exports are byte-identical.

use super::{MeshError, TriangleMesh, Vec3};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub fn write_off<W: Write>(mesh: &TriangleMesh, out: W) -> Result<(), MeshError> {
    let mut w = BufWriter::new(out);
    writeln!(w, "OFF")?;
    writeln!(
        w,
        "{} {} {}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.edges().len()
    )?;
    for v in &mesh.vertices {
        writeln!(w, "{} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_off<R: Read>(input: R) -> Result<TriangleMesh, MeshError> {
    let reader = BufReader::new(input);
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.split('#').next().unwrap_or("").trim().to_string();
        if !trimmed.is_empty() {
            lines.push((idx + 1, trimmed));
        }
    }
    let mut iter = lines.into_iter();
    let (line_no, header) = iter.next().ok_or(MeshError::Parse {
        line: 0,
        message: "empty OFF file".into(),
    })?;
    let counts_line = if header == "OFF" {
        iter.next().ok_or(MeshError::Parse {
            line: line_no,
            message: "missing counts line".into(),
        })?
    } else if let Some(rest) = header.strip_prefix("OFF") {
        (line_no, rest.trim().to_string())
    } else {
        return Err(MeshError::Parse {
            line: line_no,
            message: "missing OFF header".into(),
        });
    };
    let parts: Vec<usize> = counts_line
        .1
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| MeshError::Parse {
            line: counts_line.0,
            message: format!("bad counts: {e}"),
        })?;
    if parts.len() < 2 {
        return Err(MeshError::Parse {
            line: counts_line.0,
            message: "counts line needs at least V and F".into(),
        });
    }
    let (nv, nf) = (parts[0], parts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, text) = iter.next().ok_or(MeshError::Parse {
            line: 0,
            message: "unexpected end of vertex list".into(),
        })?;
        let coords: Vec<f64> = text
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| MeshError::Parse {
                line: ln,
                message: format!("bad vertex: {e}"),
            })?;
        if coords.len() != 3 {
            return Err(MeshError::Parse {
                line: ln,
                message: "vertex line needs 3 coordinates".into(),
            });
        }
        vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, text) = iter.next().ok_or(MeshError::Parse {
            line: 0,
            message: "unexpected end of face list".into(),
        })?;
        let nums: Vec<usize> = text
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| MeshError::Parse {
                line: ln,
                message: format!("bad face: {e}"),
            })?;
        if nums.len() != 4 || nums[0] != 3 {
            return Err(MeshError::Parse {
                line: ln,
                message: "only triangle faces are supported".into(),
            });
        }
        triangles.push([nums[1], nums[2], nums[3]]);
    }
    let mesh = TriangleMesh::new(vertices, triangles);
    mesh.euler_characteristic()?; // index validation
    Ok(mesh)
}

pub fn write_obj<W: Write>(mesh: &TriangleMesh, out: W) -> Result<(), MeshError> {
    let mut w = BufWriter::new(out);
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    match &mesh.object_ids {
        None => {
            for t in &mesh.triangles {
                writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
            }
        }
        Some(ids) => {
            // Triangles grouped by object id, ascending, original order
            // within each group.
            for id in mesh.object_id_list() {
                writeln!(w, "g object_{id}")?;
                for (t, tri) in mesh.triangles.iter().enumerate() {
                    if ids[t] == id {
                        writeln!(w, "f {} {} {}", tri[0] + 1, tri[1] + 1, tri[2] + 1)?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_obj<R: Read>(input: R) -> Result<TriangleMesh, MeshError> {
    let reader = BufReader::new(input);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut object_ids: Vec<u32> = Vec::new();
    let mut current_id: Option<u32> = None;
    let mut saw_group = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let ln = idx + 1;
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .map(|s| s.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Parse {
                        line: ln,
                        message: format!("bad vertex: {e}"),
                    })?;
                if coords.len() < 3 {
                    return Err(MeshError::Parse {
                        line: ln,
                        message: "vertex needs 3 coordinates".into(),
                    });
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idxs: Vec<usize> = fields
                    .map(|s| {
                        s.split('/')
                            .next()
                            .unwrap_or("")
                            .parse::<usize>()
                            .map_err(|e| MeshError::Parse {
                                line: ln,
                                message: format!("bad face index: {e}"),
                            })
                    })
                    .collect::<Result<_, _>>()?;
                if idxs.len() != 3 {
                    return Err(MeshError::Parse {
                        line: ln,
                        message: "only triangle faces are supported".into(),
                    });
                }
                triangles.push([idxs[0] - 1, idxs[1] - 1, idxs[2] - 1]);
                object_ids.push(current_id.unwrap_or(0));
            }
            Some("g") => {
                let name = fields.next().unwrap_or("");
                current_id = name
                    .strip_prefix("object_")
                    .and_then(|s| s.parse::<u32>().ok());
                saw_group = saw_group || current_id.is_some();
            }
            _ => {} // only v/f records (and object groups) are honored
        }
    }
    let mut mesh = TriangleMesh::new(vertices, triangles);
    if saw_group {
        mesh.object_ids = Some(object_ids);
    }
    mesh.euler_characteristic()?;
    Ok(mesh)
}

pub fn write_off_file<P: AsRef<Path>>(mesh: &TriangleMesh, path: P) -> Result<(), MeshError> {
    write_off(mesh, std::fs::File::create(path)?)
}

pub fn read_off_file<P: AsRef<Path>>(path: P) -> Result<TriangleMesh, MeshError> {
    read_off(std::fs::File::open(path)?)
}

pub fn write_obj_file<P: AsRef<Path>>(mesh: &TriangleMesh, path: P) -> Result<(), MeshError> {
    write_obj(mesh, std::fs::File::create(path)?)
}

pub fn read_obj_file<P: AsRef<Path>>(path: P) -> Result<TriangleMesh, MeshError> {
    read_obj(std::fs::File::open(path)?)
}

/// Reads a mesh by file extension (`.off` or `.obj`).
pub fn read_mesh_file<P: AsRef<Path>>(path: P) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("obj") => read_obj_file(path),
        _ => read_off_file(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn off_roundtrip_is_exact() {
        let torus = shapes::torus(5, 8, 2.0, 0.5);
        let mut buf = Vec::new();
        write_off(&torus, &mut buf).unwrap();
        let back = read_off(buf.as_slice()).unwrap();
        assert_eq!(torus.vertices, back.vertices);
        assert_eq!(torus.triangles, back.triangles);

        // Rewriting produces identical bytes.
        let mut buf2 = Vec::new();
        write_off(&back, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn obj_roundtrip_carries_object_ids() {
        let a = shapes::triangulated_cube(1.0);
        let b = shapes::uv_sphere(4, 6, 1.0).translated(Vec3::new(5.0, 0.0, 0.0));
        let scene = TriangleMesh::union(&[(&a, 0), (&b, 3)]);
        let mut buf = Vec::new();
        write_obj(&scene, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("g object_0"));
        assert!(text.contains("g object_3"));
        let back = read_obj(buf.as_slice()).unwrap();
        assert_eq!(back.vertices, scene.vertices);
        assert_eq!(back.object_ids.as_ref().unwrap().len(), scene.triangle_count());
        assert_eq!(back.object_id_list(), vec![0, 3]);
    }

    #[test]
    fn malformed_off_reports_line() {
        let bad = "OFF\n2 1 0\n0 0 0\n1 x 0\n3 0 1 2\n";
        match read_off(bad.as_bytes()) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
