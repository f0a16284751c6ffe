//! Parametric reduced-order models by matrix interpolation for 2D
//! plane-stress structures whose finite-element meshes change with the
//! geometric parameters.
//!
//! Sampled reduced bases live on different meshes. They are brought onto one
//! reference mesh by morphing that mesh onto each sampled geometry
//! ([`morph`]) and evaluating the sampled basis with the element shape
//! functions at the morphed nodes ([`transfer`]). Once all bases share a
//! discretization, subspace angles drive adaptive sampling and clustering and
//! the reduced operators are transformed to a common coordinate system and
//! interpolated ([`pmor`]).
//!
//! The geometric kernels (points, triangle measures, shape functions) are
//! generic over [`Scalar`]; the solvers work in `f64`, and the aliases below
//! fix the concrete types used throughout.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod mor;
pub mod morph;
pub mod pmor;
pub mod scalar;
pub mod serial;
pub mod transfer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Point in the `(x, z)` plane, in metres.
pub type Point = geometry::Point2<f64>;
/// Dense real matrix.
pub type Mat = faer::Mat<f64>;
/// Complex scalar used by frequency responses.
pub type C64 = num_complex::Complex<f64>;
