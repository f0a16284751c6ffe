//! Plane-stress finite elements: assembly of mass, damping and stiffness,
//! Dirichlet elimination, and full-order frequency responses.

mod assemble;
mod frf;
mod material;
pub mod tri6;

pub use assemble::{assemble, assemble_unconstrained, Axis, FomSystem, NodalDof};
pub use frf::{solve_frf, static_response, SpectralFrf};
pub use material::Material;
