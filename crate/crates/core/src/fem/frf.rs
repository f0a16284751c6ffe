use std::f64::consts::TAU;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::SparseColMatRef;
use faer::Mat;

use super::assemble::FomSystem;
use crate::error::{Error, Result};
use crate::linalg::{generalized_eigen_dense, SparseCholesky};
use crate::C64;

fn check_freqs(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::InvalidInput("frequency list is empty".into()));
    }
    if let Some(f) = freqs.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return Err(Error::InvalidInput(format!("frequencies must be positive, got {f}")));
    }
    Ok(())
}

/// Output `y(s_i) = g q` with `(s^2 M + s C + K) q = f` and `s_i = i 2 pi f_i`,
/// one sparse LU per frequency on a shared symbolic factorization.
pub fn solve_frf(fom: &FomSystem, freqs: &[f64]) -> Result<Vec<C64>> {
    check_freqs(freqs)?;
    let n = fom.n();
    let symbolic = SymbolicLu::try_new(fom.k.symbolic()).map_err(|e| Error::FrfFactorization {
        index: 0,
        freq: freqs[0],
        reason: format!("symbolic analysis: {e:?}"),
    })?;
    let mut values = vec![C64::new(0.0, 0.0); fom.k.nnz()];
    let mut out = Vec::with_capacity(freqs.len());
    for (index, &freq) in freqs.iter().enumerate() {
        let s = C64::new(0.0, TAU * freq);
        let s2 = s * s;
        for (v, ((m, c), k)) in values
            .iter_mut()
            .zip(fom.m.values.iter().zip(&fom.c.values).zip(&fom.k.values))
        {
            *v = s2 * m + s * c + k;
        }
        let a = SparseColMatRef::new(fom.k.symbolic(), &values);
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), a).map_err(|e| Error::FrfFactorization {
            index,
            freq,
            reason: format!("{e:?}"),
        })?;
        let mut rhs = Mat::from_fn(n, 1, |i, _| C64::new(fom.f[i], 0.0));
        lu.solve_in_place(rhs.as_mut());
        let y: C64 = fom.g.iter().enumerate().filter(|(_, g)| **g != 0.0).map(|(i, g)| rhs[(i, 0)] * g).sum();
        if !(y.re.is_finite() && y.im.is_finite()) {
            return Err(Error::FrfFactorization {
                index,
                freq,
                reason: "non-finite response".into(),
            });
        }
        out.push(y);
    }
    Ok(out)
}

/// Static output `g K^-1 f`.
pub fn static_response(fom: &FomSystem) -> Result<f64> {
    let chol = SparseCholesky::new(&fom.k)?;
    let mut q = fom.f.clone();
    chol.solve_in_place(&mut q);
    Ok(fom.g.iter().zip(&q).map(|(g, q)| g * q).sum())
}

/// Frequency response through the complete modal decomposition.
///
/// With Rayleigh damping every eigenvector of `(K, M)` also diagonalizes `C`,
/// so `y(s) = sum_j (g phi_j)(phi_j^T f) / (s^2 + s (alpha + beta w_j^2) + w_j^2)`
/// holds exactly. One dense eigendecomposition replaces a factorization per
/// frequency, which pays off for long sweeps on moderate DOF counts.
#[derive(Debug, Clone)]
pub struct SpectralFrf {
    pub omega2: Vec<f64>,
    pub residues: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl SpectralFrf {
    pub fn new(fom: &FomSystem) -> Result<Self> {
        let (omega2, phi) = generalized_eigen_dense(fom.k.to_dense().as_ref(), fom.m.to_dense().as_ref())?;
        let n = fom.n();
        let residues = (0..n)
            .map(|j| {
                let col = phi.col(j);
                let gp: f64 = fom.g.iter().enumerate().filter(|(_, g)| **g != 0.0).map(|(i, g)| g * col[i]).sum();
                let fp: f64 = fom.f.iter().enumerate().filter(|(_, f)| **f != 0.0).map(|(i, f)| f * col[i]).sum();
                gp * fp
            })
            .collect();
        Ok(SpectralFrf {
            omega2,
            residues,
            alpha: fom.material.alpha,
            beta: fom.material.beta,
        })
    }

    pub fn eval(&self, freqs: &[f64]) -> Result<Vec<C64>> {
        check_freqs(freqs)?;
        Ok(freqs
            .iter()
            .map(|&f| {
                let s = C64::new(0.0, TAU * f);
                let s2 = s * s;
                self.omega2
                    .iter()
                    .zip(&self.residues)
                    .map(|(&w2, &p)| p / (s2 + s * (self.alpha + self.beta * w2) + w2))
                    .sum()
            })
            .collect())
    }

    /// Undamped natural frequencies in Hz, ascending.
    pub fn natural_frequencies(&self) -> Vec<f64> {
        self.omega2.iter().map(|w2| w2.max(0.0).sqrt() / TAU).collect()
    }
}
