use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::Experiment;
use super::run::full_order_model;
use crate::error::{Error, Result};
use crate::mor::modal_truncation;
use crate::morph::{characteristic_nodes, morph_rbf, morph_saeh, MorphSpec};
use crate::transfer::{DofLayout, TransferMap};

/// Wall-clock seconds of the stages that bring one sampled basis onto the
/// reference mesh.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingReport {
    pub rbf_seconds: f64,
    pub saeh_seconds: f64,
    pub saeh_steps: usize,
    pub saeh_single_step_seconds: f64,
    /// Point location plus evaluation of all transferred vectors.
    pub interpolation_seconds: f64,
    pub vectors: usize,
    pub reference_nodes: usize,
    pub characteristic_nodes: usize,
    /// RBF block-system size per displacement component.
    pub rbf_system_sizes: [usize; 2],
}

impl TimingReport {
    pub fn rbf_faster_than_saeh(&self) -> bool {
        self.rbf_seconds < self.saeh_seconds
    }

    pub fn rbf_faster_than_interpolation(&self) -> bool {
        self.rbf_seconds < self.interpolation_seconds
    }
}

/// Times RBF and SAEH morphing of the reference mesh onto the target
/// geometry and the transfer of the target's modal basis.
pub fn timing_report(exp: &Experiment) -> Result<TimingReport> {
    let cfg = exp
        .timing
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("experiment `{}` has no timing configuration", exp.name)))?;
    let (ref_params, ref_mesh, ref_fom) = full_order_model(exp, &cfg.reference)?;
    let (target_params, target_mesh, target_fom) = full_order_model(exp, &cfg.target)?;
    let basis = modal_truncation(&target_fom, cfg.vectors)?.basis;
    let spec = MorphSpec::between(&ref_params, &target_params)?;
    let characteristic = characteristic_nodes(&spec.resolve(&ref_mesh)?).len();

    let start = Instant::now();
    let rbf = morph_rbf(&ref_mesh, &spec, exp.rbf_order)?;
    let rbf_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    morph_saeh(&ref_mesh, &spec, exp.saeh_steps)?;
    let saeh_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    morph_saeh(&ref_mesh, &spec, 1)?;
    let saeh_single_step_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let map = TransferMap::new(&target_mesh, &rbf.mesh)?;
    let x = map.apply(
        &basis,
        DofLayout {
            mesh: &target_mesh,
            free: &target_fom.free_dofs,
        },
        DofLayout {
            mesh: &rbf.mesh,
            free: &ref_fom.free_dofs,
        },
    );
    let interpolation_seconds = start.elapsed().as_secs_f64();
    debug_assert_eq!(x.ncols(), cfg.vectors);

    Ok(TimingReport {
        rbf_seconds,
        saeh_seconds,
        saeh_steps: exp.saeh_steps,
        saeh_single_step_seconds,
        interpolation_seconds,
        vectors: cfg.vectors,
        reference_nodes: ref_mesh.n_nodes(),
        characteristic_nodes: characteristic,
        rbf_system_sizes: rbf.rbf_system_sizes.unwrap_or([0, 0]),
    })
}
