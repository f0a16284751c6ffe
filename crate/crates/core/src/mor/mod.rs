//! Modal truncation of a full-order model to a sampled reduced-order model.

mod eigen;

use std::f64::consts::TAU;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::FomSystem;
use crate::linalg::{symmetrize, thin_qr};
use crate::C64;

pub use eigen::{lowest_eigenpairs, Eigenpairs, RESIDUAL_TOL};

/// Reduced operators `(s^2 M + s C + K) x = f u`, `y = g x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSystem {
    #[serde(with = "crate::serial::mat")]
    pub m: Mat<f64>,
    #[serde(with = "crate::serial::mat")]
    pub c: Mat<f64>,
    #[serde(with = "crate::serial::mat")]
    pub k: Mat<f64>,
    #[serde(with = "crate::serial::vec")]
    pub f: Vec<f64>,
    #[serde(with = "crate::serial::vec")]
    pub g: Vec<f64>,
}

impl ReducedSystem {
    pub fn order(&self) -> usize {
        self.k.nrows()
    }

    /// `T^T X T` for every operator, `f T`, `g T`.
    pub fn transform(&self, t: &Mat<f64>) -> ReducedSystem {
        let congruence = |x: &Mat<f64>| {
            let mut y = t.transpose() * x * t;
            symmetrize(&mut y);
            y
        };
        let tf = t.transpose() * Mat::from_fn(self.f.len(), 1, |i, _| self.f[i]);
        let gt = Mat::from_fn(1, self.g.len(), |_, j| self.g[j]) * t;
        ReducedSystem {
            m: congruence(&self.m),
            c: congruence(&self.c),
            k: congruence(&self.k),
            f: (0..tf.nrows()).map(|i| tf[(i, 0)]).collect(),
            g: (0..gt.ncols()).map(|j| gt[(0, j)]).collect(),
        }
    }

    /// Frequency response. A frequency at which the dynamic matrix is
    /// numerically singular yields `NaN` and is listed in `singular`.
    pub fn frf(&self, freqs: &[f64]) -> ReducedFrf {
        let r = self.order();
        let mut y = Vec::with_capacity(freqs.len());
        let mut singular = Vec::new();
        let mut a = vec![C64::new(0.0, 0.0); r * r];
        let mut b = vec![C64::new(0.0, 0.0); r];
        for (idx, &freq) in freqs.iter().enumerate() {
            let s = C64::new(0.0, TAU * freq);
            let s2 = s * s;
            for j in 0..r {
                for i in 0..r {
                    a[i * r + j] = s2 * self.m[(i, j)] + s * self.c[(i, j)] + self.k[(i, j)];
                }
                b[j] = C64::new(self.f[j], 0.0);
            }
            match solve_complex(&mut a, &mut b, r) {
                Some(()) => y.push(self.g.iter().zip(&b).map(|(g, x)| x * g).sum()),
                None => {
                    singular.push(idx);
                    y.push(C64::new(f64::NAN, f64::NAN));
                }
            }
        }
        ReducedFrf { y, singular }
    }

    /// Undamped natural frequencies in Hz, ascending.
    pub fn natural_frequencies(&self) -> Result<Vec<f64>> {
        let (w2, _) = crate::linalg::generalized_eigen_dense(self.k.as_ref(), self.m.as_ref())?;
        Ok(w2.iter().map(|w| w.max(0.0).sqrt() / TAU).collect())
    }
}

/// Gaussian elimination with partial pivoting on a row-major `n x n` system.
/// Returns `None` when a pivot falls below `n eps` times the largest entry.
fn solve_complex(a: &mut [C64], b: &mut [C64], n: usize) -> Option<()> {
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tiny = n as f64 * f64::EPSILON * scale;
    if !(scale > 0.0 && scale.is_finite()) {
        return None;
    }
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|i| (i, a[i * n + col].norm()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax <= tiny {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
            }
            b.swap(piv, col);
        }
        let inv = a[col * n + col].inv();
        for i in col + 1..n {
            let factor = a[i * n + col] * inv;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for j in col + 1..n {
                let v = a[col * n + j];
                a[i * n + j] -= factor * v;
            }
            let v = b[col];
            b[i] -= factor * v;
        }
    }
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= a[i * n + j] * b[j];
        }
        b[i] = acc / a[i * n + i];
    }
    Some(())
}

#[derive(Debug, Clone)]
pub struct ReducedFrf {
    pub y: Vec<C64>,
    /// Indices of frequencies with a singular dynamic matrix.
    pub singular: Vec<usize>,
}

/// Reduced-order model sampled at one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RomSample {
    pub p: Vec<f64>,
    pub mesh_id: String,
    /// Orthonormal basis `V` over the free DOFs of the sample's own mesh.
    #[serde(with = "crate::serial::mat")]
    pub basis: Mat<f64>,
    pub system: ReducedSystem,
    /// Eigenfrequencies in Hz of the retained modes.
    pub eigfreqs: Vec<f64>,
}

impl RomSample {
    pub fn with_parameter(mut self, p: &[f64]) -> Self {
        self.p = p.to_vec();
        self
    }

    pub fn order(&self) -> usize {
        self.basis.ncols()
    }
}

/// Projects `fom` onto its `r` lowest modes, orthonormalized.
pub fn modal_truncation(fom: &FomSystem, r: usize) -> Result<RomSample> {
    let pairs = lowest_eigenpairs(&fom.k, &fom.m, r)?;
    let mut phi = pairs.vectors;
    for j in 0..r {
        let col = phi.col(j);
        let (imax, _) = (0..col.nrows())
            .map(|i| (i, col[i].abs()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if col[imax] < 0.0 {
            for i in 0..phi.nrows() {
                phi[(i, j)] = -phi[(i, j)];
            }
        }
    }
    let (v, _) = thin_qr(phi.as_ref());
    let system = project(fom, &v);
    Ok(RomSample {
        p: Vec::new(),
        mesh_id: fom.mesh_id.clone(),
        basis: v,
        system,
        eigfreqs: pairs.values.iter().map(|w2| w2.max(0.0).sqrt() / TAU).collect(),
    })
}

/// Galerkin projection of `fom` onto the columns of `v`.
pub fn project(fom: &FomSystem, v: &Mat<f64>) -> ReducedSystem {
    if v.nrows() != fom.n() {
        panic!("basis has {} rows for {} dofs", v.nrows(), fom.n());
    }
    let vt_vec = |x: &[f64]| -> Vec<f64> {
        (0..v.ncols())
            .map(|j| x.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(i, a)| a * v[(i, j)]).sum())
            .collect()
    };
    ReducedSystem {
        m: fom.m.project(v.as_ref()),
        c: fom.c.project(v.as_ref()),
        k: fom.k.project(v.as_ref()),
        f: vt_vec(&fom.f),
        g: vt_vec(&fom.g),
    }
}

/// Mean relative FRF error `mean |y - y_hat| / |y|` over the frequencies
/// where the reference is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeError {
    pub mean: f64,
    /// Frequencies skipped because the reference response is zero.
    pub excluded: usize,
}

pub fn mean_relative_error(reference: &[C64], approx: &[C64]) -> Result<RelativeError> {
    if reference.len() != approx.len() || reference.is_empty() {
        return Err(Error::InvalidInput(format!(
            "response lengths {} and {} differ or are empty",
            reference.len(),
            approx.len()
        )));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for (y, yh) in reference.iter().zip(approx) {
        let den = y.norm();
        if den == 0.0 {
            continue;
        }
        sum += (y - yh).norm() / den;
        used += 1;
    }
    let excluded = reference.len() - used;
    if excluded > 0 {
        log::warn!("{excluded} frequencies with zero reference response excluded from the error");
    }
    let mean = if used == 0 { f64::NAN } else { sum / used as f64 };
    Ok(RelativeError { mean, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, solve_frf, Axis, Material, NodalDof};
    use crate::linalg::orthonormality_deviation;
    use crate::mesh::{generate_structured_beam, GeometryParams};
    use crate::Point;

    fn beam(l: f64, h: f64) -> FomSystem {
        let mesh = generate_structured_beam(&GeometryParams::beam(l).unwrap(), h).unwrap();
        assemble(
            &mesh,
            &Material::steel_plate(),
            "Gc1",
            &NodalDof::new(Point::new(l, 0.1), Axis::Z),
            &NodalDof::new(Point::new(l, 0.0), Axis::Z),
        )
        .unwrap()
    }

    #[test]
    fn full_order_basis_reproduces_frf() {
        let fom = beam(1.0, 0.1);
        let rom = modal_truncation(&fom, fom.n()).unwrap();
        let freqs = [3.0, 250.0, 1700.0];
        let full = solve_frf(&fom, &freqs).unwrap();
        let red = rom.system.frf(&freqs);
        assert!(red.singular.is_empty());
        for (a, b) in full.iter().zip(&red.y) {
            assert!((a - b).norm() < 1e-8 * a.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn basis_is_orthonormal_and_nested() {
        let fom = beam(1.0, 0.05);
        let r8 = modal_truncation(&fom, 8).unwrap();
        let r16 = modal_truncation(&fom, 16).unwrap();
        assert!(orthonormality_deviation(r16.basis.as_ref()) < 1e-12);
        for (a, b) in r8.eigfreqs.iter().zip(&r16.eigfreqs) {
            assert!((a - b).abs() < 1e-9 * b);
        }
        // span(V8) is contained in span(V16)
        let c = r16.basis.transpose() * &r8.basis;
        for j in 0..8 {
            let norm2: f64 = (0..16).map(|i| c[(i, j)].powi(2)).sum();
            assert!((norm2 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn first_mode_matches_euler_bernoulli() {
        let l = 1.0;
        let fom = beam(l, 0.02);
        let rom = modal_truncation(&fom, 16).unwrap();
        let mat = Material::steel_plate();
        let (h, t) = (0.1f64, mat.t);
        let i = t * h.powi(3) / 12.0;
        let a = t * h;
        let f1 = 1.875104f64.powi(2) / TAU * (mat.e * i / (mat.rho * a * l.powi(4))).sqrt();
        assert!((rom.eigfreqs[0] - f1).abs() < 0.05 * f1, "{} vs {f1}", rom.eigfreqs[0]);
        assert!(rom.eigfreqs[15] > 5000.0, "{}", rom.eigfreqs[15]);
        assert!(rom.eigfreqs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn reduced_operators_are_diagonal_in_modal_coordinates() {
        let fom = beam(1.0, 0.1);
        let rom = modal_truncation(&fom, 6).unwrap();
        let m = &rom.system.m;
        // V is an orthonormalized mode set, so M_r is SPD and symmetric
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
        let back = rom.system.natural_frequencies().unwrap();
        for (a, b) in back.iter().zip(&rom.eigfreqs) {
            assert!((a - b).abs() < 1e-8 * b);
        }
    }

    #[test]
    fn singular_frequency_is_flagged() {
        let sys = ReducedSystem {
            m: Mat::from_fn(1, 1, |_, _| 1.0),
            c: Mat::zeros(1, 1),
            k: Mat::from_fn(1, 1, |_, _| TAU * TAU),
            f: vec![1.0],
            g: vec![1.0],
        };
        let out = sys.frf(&[0.5, 1.0]);
        assert_eq!(out.singular, vec![1]);
        assert!(out.y[1].re.is_nan());
        assert!((out.y[0].re - 1.0 / (TAU * TAU * 0.75)).abs() < 1e-14);
    }

    #[test]
    fn relative_error_skips_zero_reference() {
        let y = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 2.0)];
        let yh = [C64::new(1.1, 0.0), C64::new(5.0, 0.0), C64::new(0.0, 2.0)];
        let e = mean_relative_error(&y, &yh).unwrap();
        assert_eq!(e.excluded, 1);
        assert!((e.mean - 0.05).abs() < 1e-15);
        assert!(mean_relative_error(&y, &yh[..2]).is_err());
    }
}
