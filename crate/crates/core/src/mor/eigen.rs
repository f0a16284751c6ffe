//! Lowest eigenpairs of `K phi = omega^2 M phi` by shift-invert Lanczos.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{generalized_eigen_dense, sym_eigen, Csc, SparseCholesky};

/// Problems up to this size go straight to the dense solver.
const DENSE_LIMIT: usize = 400;
/// Required relative residual `|K phi - lambda M phi| / |K phi|`.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Eigenpairs {
    /// `omega^2`, ascending.
    pub values: Vec<f64>,
    /// Mass-normalized eigenvectors as columns.
    pub vectors: Mat<f64>,
    /// Relative residual of every pair.
    pub residuals: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn relative_residuals(k: &Csc, m: &Csc, values: &[f64], vectors: &Mat<f64>) -> Vec<f64> {
    let n = k.nrows;
    let mut kx = vec![0.0; n];
    let mut mx = vec![0.0; n];
    values
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let x: Vec<f64> = (0..n).map(|i| vectors[(i, j)]).collect();
            k.matvec(&x, &mut kx);
            m.matvec(&x, &mut mx);
            let num: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            num / dot(&kx, &kx).sqrt()
        })
        .collect()
}

/// The `r` smallest eigenpairs of the symmetric pencil `(K, M)` with `K`
/// positive definite.
pub fn lowest_eigenpairs(k: &Csc, m: &Csc, r: usize) -> Result<Eigenpairs> {
    let n = k.nrows;
    if r == 0 || r > n {
        return Err(Error::InvalidInput(format!("requested {r} eigenpairs of a size-{n} problem")));
    }
    let (values, vectors) = if n <= DENSE_LIMIT || 3 * r >= n {
        let (vals, vecs) = generalized_eigen_dense(k.to_dense().as_ref(), m.to_dense().as_ref())?;
        (vals[..r].to_vec(), vecs.subcols(0, r).to_owned())
    } else {
        lanczos(k, m, r)?
    };
    let residuals = relative_residuals(k, m, &values, &vectors);
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    if !(worst < RESIDUAL_TOL) {
        return Err(Error::EigenNoConvergence {
            residual: worst,
            steps: 0,
        });
    }
    Ok(Eigenpairs {
        values,
        vectors,
        residuals,
    })
}

/// Lanczos on `K^-1 M` in the `M` inner product with full
/// reorthogonalization. Largest Ritz values `theta` give `lambda = 1/theta`.
fn lanczos(k: &Csc, m: &Csc, r: usize) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = k.nrows;
    let chol = SparseCholesky::new(k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut mq: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let mut mv = vec![0.0; n];
    let start = |rng: &mut ChaCha8Rng, q: &[Vec<f64>], mq: &[Vec<f64>], mv: &mut Vec<f64>| {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        for _ in 0..2 {
            for (qi, mqi) in q.iter().zip(mq) {
                let c = dot(mqi, &v);
                v.iter_mut().zip(qi).for_each(|(a, b)| *a -= c * b);
            }
        }
        m.matvec(&v, mv);
        let norm = dot(&v, mv).sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        let mvn: Vec<f64> = mv.iter().map(|a| a / norm).collect();
        (v, mvn)
    };
    let (v0, mv0) = start(&mut rng, &q, &mq, &mut mv);
    q.push(v0);
    mq.push(mv0);

    let max_steps = n;
    let first_check = (2 * r + 20).min(n);
    let mut steps = 0;
    let mut last_estimate = f64::INFINITY;
    loop {
        let j = q.len() - 1;
        let mut w = mq[j].clone();
        chol.solve_in_place(&mut w);
        let mut a_j = 0.0;
        for pass in 0..2 {
            let coeffs: Vec<f64> = mq.iter().map(|mqi| dot(mqi, &w)).collect();
            for (c, qi) in coeffs.iter().zip(&q) {
                w.iter_mut().zip(qi).for_each(|(a, b)| *a -= c * b);
            }
            if pass == 0 {
                a_j = coeffs[j];
            } else {
                a_j += coeffs[j];
            }
        }
        alpha.push(a_j);
        m.matvec(&w, &mut mv);
        let b_j = dot(&w, &mv).max(0.0).sqrt();
        steps += 1;

        let size = alpha.len();
        let at_end = size >= max_steps;
        let invariant = b_j <= 1e-13 * a_j.abs().max(f64::MIN_POSITIVE);
        if size >= first_check && (size % 10 == 0 || at_end || invariant) {
            let t = Mat::from_fn(size, size, |a, b| {
                if a == b {
                    alpha[a]
                } else if a + 1 == b || b + 1 == a {
                    beta[a.min(b)]
                } else {
                    0.0
                }
            });
            let (theta, s) = sym_eigen(t.as_ref())?;
            // theta ascending: the r largest are at the end.
            let idx: Vec<usize> = (0..r).map(|i| size - 1 - i).collect();
            let estimate = idx
                .iter()
                .map(|&i| (b_j * s[(size - 1, i)]).abs() / theta[i].abs())
                .fold(0.0, f64::max);
            last_estimate = estimate;
            if estimate < 1e-12 || at_end || (invariant && size >= r) {
                let mut vecs = Mat::zeros(n, r);
                for (col, &i) in idx.iter().enumerate() {
                    for (jj, qj) in q.iter().enumerate() {
                        let c = s[(jj, i)];
                        for row in 0..n {
                            vecs[(row, col)] += c * qj[row];
                        }
                    }
                }
                if estimate < 1e-12 || (invariant && size >= r) {
                    return refine(k, m, &chol, &vecs);
                }
                return Err(Error::EigenNoConvergence {
                    residual: estimate,
                    steps,
                });
            }
        }
        if at_end {
            return Err(Error::EigenNoConvergence {
                residual: last_estimate,
                steps,
            });
        }

        if invariant {
            // Exhausted a Krylov subspace: continue from a fresh direction.
            beta.push(0.0);
            let (v, mvn) = start(&mut rng, &q, &mq, &mut mv);
            q.push(v);
            mq.push(mvn);
        } else {
            beta.push(b_j);
            q.push(w.iter().map(|a| a / b_j).collect());
            mq.push(mv.iter().map(|a| a / b_j).collect());
        }
    }
}

/// One inverse-iteration step `Y = K^-1 M X` followed by Rayleigh-Ritz on
/// `span(Y)`. Ritz vectors from the shift-inverted operator are accurate in
/// the `M` norm but carry high-frequency error that `K` amplifies; the extra
/// solve damps it by the ratio of the retained to the discarded eigenvalues.
fn refine(k: &Csc, m: &Csc, chol: &SparseCholesky, x: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let mut y = m.mul_dense(x.as_ref());
    chol.solve_mat(&mut y);
    let (q, _) = crate::linalg::thin_qr(y.as_ref());
    let kr = k.project(q.as_ref());
    let mr = m.project(q.as_ref());
    let (vals, s) = generalized_eigen_dense(kr.as_ref(), mr.as_ref())?;
    Ok((vals, &q * &s))
}
