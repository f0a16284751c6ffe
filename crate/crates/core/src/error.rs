//! Error type shared by every module.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parameter {value} outside [{lower}, {upper}] for {what}")]
    ParameterOutOfBounds {
        what: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("mesh generator did not produce a valid triangulation after {iterations} iterations: {reason}")]
    MeshGeneration { iterations: usize, reason: String },

    #[error("{path}: {message}")]
    MeshFormat { path: PathBuf, message: String },

    #[error("element {element} has a non-positive Jacobian determinant ({det:e})")]
    SingularJacobian { element: usize, det: f64 },

    #[error("boundary group `{0}` is empty or missing")]
    EmptyGroup(String),

    #[error("factorization failed at frequency index {index} ({freq} Hz): {reason}")]
    FrfFactorization {
        index: usize,
        freq: f64,
        reason: String,
    },

    #[error("eigensolver did not converge: worst residual {residual:e} after {steps} Lanczos steps")]
    EigenNoConvergence { residual: f64, steps: usize },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("morph inverted element {element} in increment {increment} (signed area {area:e})")]
    ElementInversion {
        increment: usize,
        element: usize,
        area: f64,
    },

    #[error("conflicting prescriptions for dof {dof}: {first} vs {second}")]
    ConflictingPrescription { dof: usize, first: f64, second: f64 },

    #[error("RBF block system is singular: polynomial block has rank {rank} < 3 for component {component} ({count} centers)")]
    RbfSingular {
        component: usize,
        rank: usize,
        count: usize,
    },

    #[error("point ({x}, {z}) lies outside the mesh: nearest element {element} at distance {distance:e}")]
    PointOutside {
        x: f64,
        z: f64,
        element: usize,
        distance: f64,
    },

    #[error("basis transfer failed for {} node(s), first: {:?}", .nodes.len(), .nodes.first())]
    TransferFailed { nodes: Vec<usize> },

    #[error("basis is not orthonormal (Gram deviation {deviation:e}); re-orthonormalize first")]
    NotOrthonormal { deviation: f64 },

    #[error("sample {sample}: {source}")]
    Sample {
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("ill-conditioned transformation for sample {sample}: cond(R^T V) = {cond:e}")]
    IllConditioned { sample: usize, cond: f64 },

    #[error("interpolation: {0}")]
    Interpolation(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_sample(self, sample: usize) -> Self {
        Error::Sample {
            sample,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
