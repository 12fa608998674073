//! Point cloud sampling and training augmentations.
//!
//! Sampling is area-weighted and uniform: a triangle is drawn proportionally
//! to its area over the union of all objects, then a point is placed
//! uniformly inside it. Every point inherits the genus of the object it was
//! sampled from. Per-point RNG streams derive from the cloud seed, so
//! sampling parallelizes without losing bit-exact determinism.
//!
//! Augmentations apply globally to all points of a scene (labels must not
//! change), in a fixed order: per-axis mirror, rotation about x then y then
//! z, per-axis anisotropic scale, per-axis shift, then per-point Gaussian
//! jitter.

use crate::mesh::{TriangleMesh, Vec3};
use crate::par::map_slots;
use crate::rng::{derive_seed, rng_for, Stream};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("scene has no triangles to sample")]
    EmptyScene,
    #[error("meshes and genera lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("scene surface area is zero")]
    ZeroArea,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// N labeled points: coordinates, per-point genus label and object id.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub points: Vec<Vec3>,
    pub genus_label: Vec<u32>,
    pub object_id: Vec<u32>,
    pub rng_seed: u64,
}

impl LabeledCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sorted multiset of `(object_id, genus)` pairs present in the cloud.
    pub fn label_pairs(&self) -> Vec<(u32, u32)> {
        let mut pairs: Vec<(u32, u32)> = self
            .object_id
            .iter()
            .zip(&self.genus_label)
            .map(|(&o, &g)| (o, g))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }
}

/// Area-weighted uniform sampling of `n` labeled points from a scene of
/// per-object meshes with known genera. Deterministic in `rng_seed`
/// regardless of thread count.
pub fn sample_cloud(
    meshes: &[TriangleMesh],
    genera: &[u64],
    n: usize,
    rng_seed: u64,
) -> Result<LabeledCloud, CloudError> {
    if meshes.len() != genera.len() {
        return Err(CloudError::LengthMismatch(meshes.len(), genera.len()));
    }
    // Triangle table over the union: (object, triangle, cumulative area).
    let mut entries: Vec<(u32, usize)> = Vec::new();
    let mut cumulative: Vec<f64> = Vec::new();
    let mut total = 0.0;
    for (o, mesh) in meshes.iter().enumerate() {
        for t in 0..mesh.triangle_count() {
            total += mesh.triangle_area(t);
            entries.push((o as u32, t));
            cumulative.push(total);
        }
    }
    if entries.is_empty() {
        return Err(CloudError::EmptyScene);
    }
    if total <= 0.0 {
        return Err(CloudError::ZeroArea);
    }

    let samples: Vec<(Vec3, u32)> = map_slots(n, true, |k| {
        let mut rng = rng_for(rng_seed, Stream::Sampling, k as u64);
        let ticket: f64 = rng.gen::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= ticket).min(entries.len() - 1);
        let (o, t) = entries[idx];
        let [a, b, c] = meshes[o as usize].triangle_points(t);
        // Uniform barycentric placement via the square-root trick.
        let (u, v): (f64, f64) = (rng.gen(), rng.gen());
        let su = u.sqrt();
        let p = a * (1.0 - su) + b * (su * (1.0 - v)) + c * (su * v);
        (p, o)
    });

    let mut points = Vec::with_capacity(n);
    let mut genus_label = Vec::with_capacity(n);
    let mut object_id = Vec::with_capacity(n);
    for (p, o) in samples {
        points.push(p);
        genus_label.push(genera[o as usize] as u32);
        object_id.push(o);
    }
    Ok(LabeledCloud {
        points,
        genus_label,
        object_id,
        rng_seed,
    })
}

/// Augmentation parameters; the defaults are the training-time settings.
/// Zeroing every range (and the mirror probability) yields the identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    /// Probability of mirroring each axis independently.
    pub mirror_prob: f64,
    /// Rotation angles drawn uniformly from `[0, rotation_max_angle)` per
    /// axis; the default is a full circle.
    pub rotation_max_angle: f64,
    /// Per-axis anisotropic scale range.
    pub scale_range: [f64; 2],
    /// Per-axis shift drawn uniformly from `[-shift_range, shift_range]`,
    /// in normalized scene units.
    pub shift_range: f64,
    /// Standard deviation of the per-point Gaussian jitter.
    pub jitter_sigma: f64,
    pub rng_seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            mirror_prob: 0.5,
            rotation_max_angle: std::f64::consts::TAU,
            scale_range: [0.5, 1.5],
            shift_range: 25.0,
            jitter_sigma: 0.025,
            rng_seed: 0,
        }
    }
}

impl AugmentConfig {
    /// The identity transform (all randomness zeroed).
    pub fn identity(rng_seed: u64) -> Self {
        AugmentConfig {
            mirror_prob: 0.0,
            rotation_max_angle: 0.0,
            scale_range: [1.0, 1.0],
            shift_range: 0.0,
            jitter_sigma: 0.0,
            rng_seed,
        }
    }
}

fn rotation_matrix(axis: usize, angle: f64) -> nalgebra::Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    match axis {
        0 => nalgebra::Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        1 => nalgebra::Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        _ => nalgebra::Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
    }
}

/// Applies the augmentation suite globally to all points. Labels, object
/// ids, and point count are unchanged; deterministic in `cfg.rng_seed`.
pub fn augment(cloud: &LabeledCloud, cfg: &AugmentConfig) -> LabeledCloud {
    let mut rng = rng_for(cfg.rng_seed, Stream::Augment, 0);
    // Draw all global parameters in a fixed order.
    let mirror: [f64; 3] = {
        let mut m = [1.0; 3];
        for s in m.iter_mut() {
            if rng.gen::<f64>() < cfg.mirror_prob {
                *s = -1.0;
            }
        }
        m
    };
    let mut angles = [0.0f64; 3];
    for a in angles.iter_mut() {
        if cfg.rotation_max_angle > 0.0 {
            *a = rng.gen_range(0.0..cfg.rotation_max_angle);
        }
    }
    let mut scale = [1.0f64; 3];
    for s in scale.iter_mut() {
        let [lo, hi] = cfg.scale_range;
        *s = if lo < hi { rng.gen_range(lo..hi) } else { lo };
    }
    let mut shift = [0.0f64; 3];
    for s in shift.iter_mut() {
        if cfg.shift_range > 0.0 {
            *s = rng.gen_range(-cfg.shift_range..cfg.shift_range);
        }
    }
    let rotation =
        rotation_matrix(2, angles[2]) * rotation_matrix(1, angles[1]) * rotation_matrix(0, angles[0]);
    let shift_v = Vec3::new(shift[0], shift[1], shift[2]);

    let jitter_seed = derive_seed(cfg.rng_seed, Stream::Augment, 1);
    let jitter = Normal::new(0.0, cfg.jitter_sigma.max(0.0)).ok();
    let points: Vec<Vec3> = map_slots(cloud.points.len(), true, |k| {
        let p = cloud.points[k];
        let mirrored = Vec3::new(p.x * mirror[0], p.y * mirror[1], p.z * mirror[2]);
        let rotated = rotation * mirrored;
        let scaled = Vec3::new(rotated.x * scale[0], rotated.y * scale[1], rotated.z * scale[2]);
        let mut out = scaled + shift_v;
        if cfg.jitter_sigma > 0.0 {
            if let Some(dist) = jitter {
                let mut jrng = rng_for(jitter_seed, Stream::Jitter, k as u64);
                out += Vec3::new(
                    dist.sample(&mut jrng),
                    dist.sample(&mut jrng),
                    dist.sample(&mut jrng),
                );
            }
        }
        out
    });
    LabeledCloud {
        points,
        genus_label: cloud.genus_label.clone(),
        object_id: cloud.object_id.clone(),
        rng_seed: cfg.rng_seed,
    }
}

// ---------------------------------------------------------------------------
// Cloud CSV and prediction files
// ---------------------------------------------------------------------------

/// Writes `x,y,z,genus,object_id` rows, floats with 9 significant digits.
pub fn write_cloud_csv<W: Write>(cloud: &LabeledCloud, out: W) -> Result<(), CloudError> {
    let mut w = BufWriter::new(out);
    writeln!(w, "x,y,z,genus,object_id")?;
    for i in 0..cloud.len() {
        let p = cloud.points[i];
        writeln!(
            w,
            "{:.8e},{:.8e},{:.8e},{},{}",
            p.x, p.y, p.z, cloud.genus_label[i], cloud.object_id[i]
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cloud_csv<R: Read>(input: R) -> Result<LabeledCloud, CloudError> {
    let reader = BufReader::new(input);
    let mut points = Vec::new();
    let mut genus_label = Vec::new();
    let mut object_id = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let ln = idx + 1;
        if ln == 1 {
            let header = line.trim();
            if header != "x,y,z,genus,object_id" {
                return Err(CloudError::Parse {
                    line: 1,
                    message: format!("unexpected header {header:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CloudError::Parse {
                line: ln,
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let parse_f = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| CloudError::Parse {
                line: ln,
                message: format!("bad float {s:?}: {e}"),
            })
        };
        let parse_u = |s: &str| {
            s.trim().parse::<u32>().map_err(|e| CloudError::Parse {
                line: ln,
                message: format!("bad integer {s:?}: {e}"),
            })
        };
        points.push(Vec3::new(
            parse_f(fields[0])?,
            parse_f(fields[1])?,
            parse_f(fields[2])?,
        ));
        genus_label.push(parse_u(fields[3])?);
        object_id.push(parse_u(fields[4])?);
    }
    Ok(LabeledCloud {
        points,
        genus_label,
        object_id,
        rng_seed: 0,
    })
}

/// Prediction file: one integer label per line, row-aligned with a cloud CSV.
pub fn read_predictions<R: Read>(input: R) -> Result<Vec<u32>, CloudError> {
    let reader = BufReader::new(input);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        out.push(text.parse::<u32>().map_err(|e| CloudError::Parse {
            line: idx + 1,
            message: format!("bad label {text:?}: {e}"),
        })?);
    }
    Ok(out)
}

pub fn write_predictions<W: Write>(labels: &[u32], out: W) -> Result<(), CloudError> {
    let mut w = BufWriter::new(out);
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}
