//! Neural signed-distance surface reconstruction for volumetric point clouds.
//!
//! The crate covers the whole path from tracked 2D segmentation masks to a
//! scored triangle mesh:
//!
//! * [`geometry`] lifts mask pixels into world space, indexes and subsamples
//!   clouds, and normalizes them into the unit box.
//! * [`sampling`] draws Gaussian query points around every cloud point and
//!   binds each query to its nearest cloud point.
//! * [`nn`] holds the SDF network, its exact input gradient and the parameter
//!   gradients of losses that contain that input gradient, plus the
//!   adversarial discriminator.
//! * [`train`] implements the pull projection, the loss terms, Adam and the
//!   alternating generator/discriminator loop.
//! * [`mesh`] evaluates a field on a lattice and runs marching cubes.
//! * [`eval`] scores meshes: surface distances, volumetric overlap, topology
//!   and curvature.
//! * [`synth`] generates analytic fixtures and the robustness perturbations.
//! * [`io`] reads and writes the on-disk formats.

pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod nn;
pub mod pipeline;
pub mod sampling;
pub mod seed;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use geometry::{Frame, NormalizationTransform, PointCloud, Pose, SpatialIndex, Vec3};
pub use mesh::{ScalarGrid, TriangleMesh};
pub use train::{LossReport, TrainConfig};
pub use nn::{Discriminator, DualValue, PositionalEncoding, SdfNetwork};
pub use sampling::QuerySet;

