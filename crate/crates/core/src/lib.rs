//! Global point cloud alignment by two-stage branch and bound.
//!
//! The rotational stage searches the upper hemisphere of S^3, covered by the
//! projected tetrahedra of a 600-cell tessellation, maximizing the convolution
//! of two von-Mises-Fisher mixtures of surface normals. The translational
//! stage then searches an axis-aligned box in R^3 with octree refinement,
//! maximizing the convolution of two Gaussian mixtures of points under the
//! candidate rotation.
//!
//! Modules map onto the stages:
//! - [`numerics`]: quaternion algebra, small symmetric eigenproblems, and
//!   log-domain scalar kernels.
//! - [`tess_s3`] / [`tess_r3`]: the rotational and translational covers.
//! - [`mixtures`]: normals, weights, nonparametric clustering, mixture fits.
//! - [`bb_rotation`] / [`bb_translation`]: the two bound-and-prune searches.
//! - [`pipeline`]: end-to-end alignment with scale sweep and Manhattan-World
//!   candidate expansion.
//! - [`io`]: PLY/XYZ ingestion and JSON/CSV result emission.

pub mod bb_rotation;
pub mod bb_translation;
pub mod error;
pub mod io;
pub mod mixtures;
pub mod numerics;
pub mod pipeline;
pub mod tess_r3;
pub mod tess_s3;

pub use error::AlignError;
pub use mixtures::WeightedCloud;
pub use pipeline::{align, AlignmentConfig, AlignmentResult};
pub use numerics::{Mat3, Mat4, SymMat4, UnitQuaternion, Vec3};
