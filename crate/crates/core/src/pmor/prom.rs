//! Parametric ROM by matrix interpolation.
//!
//! Within a cluster the transferred bases `X_k = Q_k S_k` are compared with
//! a common basis `R`, the `r` dominant left singular vectors of
//! `[Q_1 ... Q_K]`. Each sampled ROM is transformed with
//! `T_k = (R^T X_k)^-1`, which expresses its generalized coordinates in the
//! coordinates of `R`, and the transformed operators are interpolated
//! entrywise.

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::align::AlignedSample;
use super::interp::{InterpMode, Interpolant};
use super::sampling::{normalize, ClusterSet};
use crate::error::{Error, Result};
use crate::linalg::{condition_number, inverse, symmetrize, thin_qr};
use crate::mor::ReducedSystem;

/// Samples whose `R^T X_k` is worse conditioned than this are left out.
pub const MAX_TRANSFORM_CONDITION: f64 = 1e8;

pub const MODEL_VERSION: u32 = 1;

/// Tolerated overshoot of the parameter bounds, as a fraction of the range.
const BOUNDS_SLACK: f64 = 1e-9;

/// Dominant `r` left singular vectors of `[Q_1 ... Q_K]`.
pub fn common_basis(qs: &[&Mat<f64>], r: usize) -> Result<Mat<f64>> {
    let n = qs.first().map_or(0, |q| q.nrows());
    let cols: usize = qs.iter().map(|q| q.ncols()).sum();
    if qs.iter().any(|q| q.nrows() != n) || r == 0 || r > n.min(cols) {
        return Err(Error::InvalidInput(format!(
            "common basis of order {r} from {} bases with {cols} columns",
            qs.len()
        )));
    }
    let mut stack = Mat::<f64>::zeros(n, cols);
    let mut c0 = 0;
    for q in qs {
        stack.submatrix_mut(0, c0, n, q.ncols()).copy_from(q.as_ref());
        c0 += q.ncols();
    }
    let svd_err = |e| Error::LinearAlgebra(format!("SVD of stacked bases: {e:?}"));
    if cols <= n {
        // Orthogonal factor first, so the SVD runs on a small square matrix.
        let (q, rr) = thin_qr(stack.as_ref());
        let svd = rr.thin_svd().map_err(svd_err)?;
        Ok(&q * svd.U().subcols(0, r))
    } else {
        let svd = stack.thin_svd().map_err(svd_err)?;
        Ok(svd.U().subcols(0, r).to_owned())
    }
}

/// One cluster of the parametric model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterModel {
    /// Sample ids used for interpolation.
    pub samples: Vec<usize>,
    /// Sample ids left out because of an ill-conditioned transformation.
    pub excluded: Vec<usize>,
    /// Normalized parameters of `samples`.
    pub points: Vec<Vec<f64>>,
    #[serde(with = "crate::serial::mat")]
    pub common_basis: Mat<f64>,
    /// `T_k` per entry of `samples`.
    #[serde(with = "crate::serial::mats")]
    pub transforms: Vec<Mat<f64>>,
    /// `cond(R^T X_k)` per entry of `samples`.
    pub conditions: Vec<f64>,
    /// Transformed operators per entry of `samples`.
    pub systems: Vec<ReducedSystem>,
    pub interpolant: Interpolant,
}

impl ClusterModel {
    /// Interpolated operators at the normalized point `t`.
    pub fn predict_normalized(&self, t: &[f64]) -> ReducedSystem {
        let w = self.interpolant.weights(t);
        let r = self.common_basis.ncols();
        let mut out = ReducedSystem {
            m: Mat::zeros(r, r),
            c: Mat::zeros(r, r),
            k: Mat::zeros(r, r),
            f: vec![0.0; r],
            g: vec![0.0; r],
        };
        for (wk, s) in w.iter().zip(&self.systems) {
            out.m += *wk * &s.m;
            out.c += *wk * &s.c;
            out.k += *wk * &s.k;
            for i in 0..r {
                out.f[i] += wk * s.f[i];
                out.g[i] += wk * s.g[i];
            }
        }
        symmetrize(&mut out.m);
        symmetrize(&mut out.c);
        symmetrize(&mut out.k);
        out
    }
}

/// Settings shared by every cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromSettings {
    pub order: usize,
    pub mode: InterpMode,
    /// Ridge penalty; ignored by splines.
    pub lambda: f64,
}

/// Builds the cluster model over the aligned samples `ids` of `samples`.
pub fn build_cluster(
    samples: &[AlignedSample],
    ids: &[usize],
    bounds: &[(f64, f64)],
    settings: &PromSettings,
) -> Result<ClusterModel> {
    let r = settings.order;
    if let Some(&k) = ids.iter().find(|&&k| samples[k].rom.order() != r) {
        return Err(Error::InvalidInput(format!(
            "sample {k} has order {}, expected {r}",
            samples[k].rom.order()
        )));
    }
    let qs: Vec<&Mat<f64>> = ids.iter().map(|&k| &samples[k].q).collect();
    let basis = common_basis(&qs, r)?;
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    let mut transforms = Vec::new();
    let mut conditions = Vec::new();
    let mut systems = Vec::new();
    for &k in ids {
        let a = basis.transpose() * &samples[k].x;
        let cond = condition_number(a.as_ref())?;
        if !(cond <= MAX_TRANSFORM_CONDITION) {
            log::warn!("{}", Error::IllConditioned { sample: k, cond });
            excluded.push(k);
            continue;
        }
        let t = inverse(a.as_ref());
        systems.push(samples[k].rom.system.transform(&t));
        transforms.push(t);
        conditions.push(cond);
        used.push(k);
    }
    if used.is_empty() {
        return Err(Error::IllConditioned {
            sample: excluded[0],
            cond: f64::INFINITY,
        });
    }
    let points: Vec<Vec<f64>> = used.iter().map(|&k| normalize(samples[k].p(), bounds)).collect();
    let interpolant = Interpolant::fit(settings.mode, &points, settings.lambda)?;
    Ok(ClusterModel {
        samples: used,
        excluded,
        points,
        common_basis: basis,
        transforms,
        conditions,
        systems,
        interpolant,
    })
}

/// Parametric ROM over all clusters, serializable to versioned JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromModel {
    pub version: u32,
    pub bounds: Vec<(f64, f64)>,
    pub settings: PromSettings,
    /// Physical parameters of every sample.
    pub sample_points: Vec<Vec<f64>>,
    pub clusters: Vec<ClusterModel>,
}

impl PromModel {
    pub fn build(
        samples: &[AlignedSample],
        clusters: &ClusterSet,
        bounds: &[(f64, f64)],
        settings: PromSettings,
    ) -> Result<Self> {
        let models = clusters
            .clusters
            .iter()
            .map(|ids| build_cluster(samples, ids, bounds, &settings))
            .collect::<Result<Vec<_>>>()?;
        Ok(PromModel {
            version: MODEL_VERSION,
            bounds: bounds.to_vec(),
            settings,
            sample_points: samples.iter().map(|s| s.p().to_vec()).collect(),
            clusters: models,
        })
    }

    /// Cluster containing the usable sample nearest to `p`.
    pub fn cluster_for(&self, p: &[f64]) -> Result<usize> {
        if p.len() != self.bounds.len() {
            return Err(Error::InvalidInput(format!(
                "model takes {} parameter(s), got {}",
                self.bounds.len(),
                p.len()
            )));
        }
        for (v, (lo, hi)) in p.iter().zip(&self.bounds) {
            let slack = BOUNDS_SLACK * (hi - lo);
            if !(*v >= lo - slack && *v <= hi + slack) {
                return Err(Error::InvalidInput(format!(
                    "parameter {v} lies outside the sampled range [{lo}, {hi}]"
                )));
            }
        }
        let t = normalize(p, &self.bounds);
        let mut best = (f64::INFINITY, usize::MAX);
        for (c, cluster) in self.clusters.iter().enumerate() {
            for q in &cluster.points {
                let d: f64 = q.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum();
                if d < best.0 {
                    best = (d, c);
                }
            }
        }
        if best.1 == usize::MAX {
            return Err(Error::Interpolation("model has no usable samples".into()));
        }
        Ok(best.1)
    }

    /// Reduced operators at the physical parameter `p`.
    pub fn predict(&self, p: &[f64]) -> Result<ReducedSystem> {
        let c = self.cluster_for(p)?;
        Ok(self.clusters[c].predict_normalized(&normalize(p, &self.bounds)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: PromModel = serde_json::from_str(s)?;
        if model.version != MODEL_VERSION {
            return Err(Error::InvalidInput(format!(
                "model version {} is not supported (expected {MODEL_VERSION})",
                model.version
            )));
        }
        Ok(model)
    }
}
