//! Synthetic 3D topological dataset toolkit.
//!
//! Builds scenes of 1-3 closed orientable surfaces of known genus, grows them
//! inside procedurally generated maze environments under a tangent-point
//! repulsive energy (which acts as a collision barrier and therefore preserves
//! genus), samples the results into per-point genus-labeled point clouds, and
//! ships the exact topological oracles, persistent-homology baseline, and
//! segmentation metrics needed to verify and evaluate such datasets.
//!
//! The crate is organized around the dataset pipeline:
//!
//! - [`mesh`]: indexed triangle meshes, validation, topology-safe edits,
//!   self-intersection detection, OFF/OBJ I/O.
//! - [`topology`]: exact genus / Betti / Euler-characteristic oracles.
//! - [`wfc`]: wave-function-collapse tile solver for barrier environments.
//! - [`seeds`]: genus-g seed construction and placement (including linked
//!   pairs) in environment free space.
//! - [`growth`]: repulsive surface growth with hard intersection rollback.
//! - [`cloud`]: area-weighted point sampling and the training augmentations.
//! - [`metrics`]: segmentation scoring (IoU / mIoU / mAcc / OA).
//! - [`rips`]: desk-scale Vietoris-Rips persistence baseline.
//! - [`pipeline`]: dataset planning, generation, manifests, verification.
//!
//! With the `parallel` feature (on by default) the hot kernels run on rayon;
//! outputs are bit-identical across thread counts and with the feature
//! disabled.

#![allow(clippy::needless_range_loop)] // numeric kernels index parallel arrays

pub mod cloud;
pub mod growth;
pub mod mesh;
pub mod metrics;
mod par;
pub mod pipeline;
pub mod rips;
pub mod rng;
pub mod seeds;
pub mod topology;
pub mod wfc;

pub use mesh::TriangleMesh;
