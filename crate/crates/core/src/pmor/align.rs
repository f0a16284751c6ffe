//! Bringing sampled bases onto the reference mesh.
//!
//! The reference mesh is morphed onto the sampled geometry, and the sampled
//! basis is evaluated at the morphed reference nodes. The resulting matrix
//! `X` has one row per free DOF of the reference mesh, so bases sampled on
//! different meshes become directly comparable.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::thin_qr;
use crate::mesh::{GeometryParams, Mesh};
use crate::mor::RomSample;
use crate::morph::{morph, MorphMethod, MorphSpec};
use crate::transfer::{DofLayout, TransferMap};

/// Mesh onto which every sampled basis is transferred.
#[derive(Debug, Clone)]
pub struct ReferenceMesh {
    pub params: GeometryParams,
    pub mesh: Mesh,
    /// Mesh DOF index of every free DOF.
    pub free_dofs: Vec<usize>,
}

/// Morph statistics of one alignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorphSummary {
    pub residual: f64,
    pub max_ratio: f64,
    pub clamped_nodes: usize,
    pub rbf_system_sizes: Option<[usize; 2]>,
}

/// A sampled ROM together with its basis on the reference DOFs.
#[derive(Debug, Clone)]
pub struct AlignedSample {
    pub rom: RomSample,
    /// Transferred basis `X`.
    pub x: Mat<f64>,
    /// `X = Q S` with orthonormal `Q` and upper triangular `S`.
    pub q: Mat<f64>,
    pub s: Mat<f64>,
    /// `None` for the reference sample itself and for padded bases.
    pub morph: Option<MorphSummary>,
}

impl AlignedSample {
    fn from_x(rom: RomSample, x: Mat<f64>, morph: Option<MorphSummary>) -> Self {
        let (q, s) = thin_qr(x.as_ref());
        AlignedSample { rom, x, q, s, morph }
    }

    pub fn p(&self) -> &[f64] {
        &self.rom.p
    }
}

/// Aligns `rom`, computed on `mesh` with free DOFs `free`, to `reference`.
///
/// When the sample geometry equals the reference geometry the basis is used
/// as is.
pub fn align_sample(
    reference: &ReferenceMesh,
    params: &GeometryParams,
    mesh: &Mesh,
    free: &[usize],
    rom: RomSample,
    method: MorphMethod,
) -> Result<AlignedSample> {
    if params.p == reference.params.p && mesh.id() == reference.mesh.id() {
        let x = rom.basis.clone();
        return Ok(AlignedSample::from_x(rom, x, None));
    }
    let spec = MorphSpec::between(&reference.params, params)?;
    let field = morph(&reference.mesh, &spec, method)?;
    let map = TransferMap::new(mesh, &field.mesh)?;
    let x = map.apply(
        &rom.basis,
        DofLayout { mesh, free },
        DofLayout {
            mesh: &field.mesh,
            free: &reference.free_dofs,
        },
    );
    let summary = MorphSummary {
        residual: field.residual,
        max_ratio: field.quality.max_ratio,
        clamped_nodes: map.clamped,
        rbf_system_sizes: field.rbf_system_sizes,
    };
    Ok(AlignedSample::from_x(rom, x, Some(summary)))
}

/// Pads every basis with zero rows to the largest DOF count, which is the
/// baseline that ignores the mesh change altogether.
pub fn zero_padded(roms: &[RomSample]) -> Result<Vec<AlignedSample>> {
    let n = roms.iter().map(|r| r.basis.nrows()).max().ok_or_else(|| {
        Error::InvalidInput("no samples to pad".into())
    })?;
    Ok(roms
        .iter()
        .map(|rom| {
            let v = &rom.basis;
            let x = Mat::from_fn(n, v.ncols(), |i, j| if i < v.nrows() { v[(i, j)] } else { 0.0 });
            AlignedSample::from_x(rom.clone(), x, None)
        })
        .collect())
}
