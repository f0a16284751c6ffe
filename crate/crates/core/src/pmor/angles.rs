use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthonormality_deviation, singular_values};

/// Largest accepted `|V^T V - I|` entry for an orthonormal basis.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnglePair {
    pub i: usize,
    pub j: usize,
    /// Principal angles in degrees, descending.
    pub theta: Vec<f64>,
}

impl AnglePair {
    pub fn max(&self) -> f64 {
        self.theta.first().copied().unwrap_or(0.0)
    }
}

fn check_orthonormal(v: MatRef<'_, f64>) -> Result<()> {
    let deviation = orthonormality_deviation(v);
    if !(deviation <= ORTHONORMAL_TOL) {
        return Err(Error::NotOrthonormal { deviation });
    }
    Ok(())
}

/// Principal angles between `span(vi)` and `span(vj)` in degrees, descending.
///
/// Cosines come from the singular values of `vi^T vj`, sines from those of
/// `vj - vi vi^T vj`; each angle is taken from whichever is better
/// conditioned, so angles near zero keep full relative accuracy.
pub fn principal_angles(vi: MatRef<'_, f64>, vj: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if vi.nrows() != vj.nrows() {
        return Err(Error::InvalidInput(format!(
            "bases live on {} and {} DOFs; transfer them to one mesh first",
            vi.nrows(),
            vj.nrows()
        )));
    }
    check_orthonormal(vi)?;
    check_orthonormal(vj)?;
    let k = vi.ncols().min(vj.ncols());
    if k == 0 {
        return Ok(Vec::new());
    }
    let c = vi.transpose() * vj;
    let cos = singular_values(c.as_ref())?;
    let resid: Mat<f64> = vj - vi * &c;
    let sin = singular_values(resid.as_ref())?;
    let mut theta: Vec<f64> = (0..k)
        .map(|l| {
            // cos descending <-> angle ascending; sin descending <-> angle descending.
            let cl = cos.get(l).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            if cl * cl < 0.5 {
                cl.acos()
            } else {
                let sl = if vj.ncols() >= k { sin.get(vj.ncols() - 1 - l).copied().unwrap_or(0.0) } else { 0.0 };
                sl.clamp(0.0, 1.0).asin()
            }
        })
        .map(f64::to_degrees)
        .collect();
    theta.sort_by(|a, b| b.total_cmp(a));
    Ok(theta)
}

pub fn subspace_angles(i: usize, vi: MatRef<'_, f64>, j: usize, vj: MatRef<'_, f64>) -> Result<AnglePair> {
    Ok(AnglePair {
        i,
        j,
        theta: principal_angles(vi, vj)?,
    })
}
