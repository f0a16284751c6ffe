//! Parametric model order reduction by matrix interpolation: subspace
//! angles, adaptive sampling and clustering, alignment of sampled bases on
//! a reference mesh, and interpolation of transformed reduced operators.

pub mod align;
pub mod angles;
pub mod interp;
pub mod prom;
pub mod sampling;

pub use align::{align_sample, zero_padded, AlignedSample, MorphSummary, ReferenceMesh};
pub use angles::{principal_angles, subspace_angles, AnglePair, ORTHONORMAL_TOL};
pub use interp::{InterpMode, Interpolant};
pub use prom::{
    build_cluster, common_basis, ClusterModel, PromModel, PromSettings, MAX_TRANSFORM_CONDITION, MODEL_VERSION,
};
pub use sampling::{
    adaptive_sample, build_clusters, initial_points, neighbour_pairs, BasisSource, ClusterSet, EdgeState,
    Hyperparameters, NeighbourEdge, SamplingResult,
};
