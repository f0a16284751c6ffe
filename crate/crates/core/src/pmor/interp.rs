//! Entrywise interpolants written as linear smoothers: a prediction is a
//! weighted sum of the sampled operators, with weights depending only on
//! the sample locations and the query point.

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpMode {
    Spline1d,
    Ridge2d,
}

/// Fitted weight generator over normalized parameter points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Interpolant {
    /// Not-a-knot cubic spline through sorted abscissae; fewer than four
    /// samples fall back to the polynomial of degree `K - 1`.
    Spline1d { t: Vec<f64>, order: Vec<usize> },
    /// Ridge regression on the tensor monomials `x^a z^b`, `a, b <= 3`.
    /// `hat` maps sample values to the 16 coefficients.
    Ridge2d {
        lambda: f64,
        #[serde(with = "crate::serial::mat")]
        hat: Mat<f64>,
    },
}

pub const RIDGE_DEGREE: usize = 3;

fn monomials(p: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity((RIDGE_DEGREE + 1).pow(2));
    for a in 0..=RIDGE_DEGREE {
        for b in 0..=RIDGE_DEGREE {
            out.push(p[0].powi(a as i32) * p[1].powi(b as i32));
        }
    }
    out
}

impl Interpolant {
    /// `points` are normalized parameter vectors of the samples, in sample order.
    pub fn fit(mode: InterpMode, points: &[Vec<f64>], lambda: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Interpolation("no samples to interpolate".into()));
        }
        match mode {
            InterpMode::Spline1d => {
                if points.iter().any(|p| p.len() != 1) {
                    return Err(Error::Interpolation("spline1d needs one-dimensional parameters".into()));
                }
                let mut order: Vec<usize> = (0..points.len()).collect();
                order.sort_by(|a, b| points[*a][0].total_cmp(&points[*b][0]));
                let t: Vec<f64> = order.iter().map(|&i| points[i][0]).collect();
                if t.windows(2).any(|w| w[1] - w[0] <= 0.0) {
                    return Err(Error::Interpolation("duplicate parameter points".into()));
                }
                Ok(Interpolant::Spline1d { t, order })
            }
            InterpMode::Ridge2d => {
                if points.iter().any(|p| p.len() != 2) {
                    return Err(Error::Interpolation("ridge2d needs two-dimensional parameters".into()));
                }
                let k = points.len();
                let m = (RIDGE_DEGREE + 1).pow(2);
                let phi = Mat::from_fn(k, m, |i, j| monomials(&points[i])[j]);
                let mut normal = phi.transpose() * &phi;
                // The constant term is not penalized.
                for j in 1..m {
                    normal[(j, j)] += lambda;
                }
                let hat = normal.partial_piv_lu().solve(phi.transpose().to_owned());
                if (0..m).any(|i| (0..k).any(|j| !hat[(i, j)].is_finite())) {
                    return Err(Error::Interpolation("ridge normal equations are singular".into()));
                }
                Ok(Interpolant::Ridge2d { lambda, hat })
            }
        }
    }

    /// Weights `w` with prediction `sum_k w_k X_k` at the normalized point `p`.
    pub fn weights(&self, p: &[f64]) -> Vec<f64> {
        match self {
            Interpolant::Spline1d { t, order } => {
                let ws = spline_weights(t, p[0]);
                let mut out = vec![0.0; t.len()];
                for (sorted, &orig) in order.iter().enumerate() {
                    out[orig] = ws[sorted];
                }
                out
            }
            Interpolant::Ridge2d { hat, .. } => {
                let f = monomials(p);
                (0..hat.ncols())
                    .map(|j| (0..hat.nrows()).map(|i| f[i] * hat[(i, j)]).sum())
                    .collect()
            }
        }
    }
}

/// Lagrange weights of the polynomial through all nodes.
fn lagrange_weights(t: &[f64], x: f64) -> Vec<f64> {
    (0..t.len())
        .map(|k| {
            t.iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, tj)| (x - tj) / (t[k] - tj))
                .product()
        })
        .collect()
}

/// Second derivatives of the not-a-knot cubic spline through `(t, y)`.
fn not_a_knot_moments(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let mut a = Mat::<f64>::zeros(n, n);
    let mut rhs = Mat::<f64>::zeros(n, 1);
    // Third derivative continuous at t[1] and t[n-2].
    a[(0, 0)] = h[1];
    a[(0, 1)] = -(h[0] + h[1]);
    a[(0, 2)] = h[0];
    for i in 1..n - 1 {
        a[(i, i - 1)] = h[i - 1];
        a[(i, i)] = 2.0 * (h[i - 1] + h[i]);
        a[(i, i + 1)] = h[i];
        rhs[(i, 0)] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    a[(n - 1, n - 3)] = h[n - 2];
    a[(n - 1, n - 2)] = -(h[n - 3] + h[n - 2]);
    a[(n - 1, n - 1)] = h[n - 3];
    let m = a.partial_piv_lu().solve(&rhs);
    (0..n).map(|i| m[(i, 0)]).collect()
}

fn spline_eval(t: &[f64], y: &[f64], m: &[f64], x: f64) -> f64 {
    let n = t.len();
    let i = match t.iter().position(|&ti| ti > x) {
        Some(0) => 0,
        Some(k) => k - 1,
        None => n - 2,
    }
    .min(n - 2);
    let h = t[i + 1] - t[i];
    let (a, b) = ((t[i + 1] - x) / h, (x - t[i]) / h);
    a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0
}

/// Weights of the 1D interpolant at `x`. Outside the sample range the end
/// pieces are extended.
pub fn spline_weights(t: &[f64], x: f64) -> Vec<f64> {
    let n = t.len();
    if n <= 3 {
        return lagrange_weights(t, x);
    }
    (0..n)
        .map(|k| {
            let y: Vec<f64> = (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
            let m = not_a_knot_moments(t, &y);
            spline_eval(t, &y, &m, x)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(w: &[f64], y: &[f64]) -> f64 {
        w.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn spline_reproduces_cubics() {
        let t = [0.0, 0.1, 0.35, 0.5, 0.8, 1.0];
        let f = |x: f64| 2.0 - x + 3.0 * x * x - 1.5 * x * x * x;
        let y: Vec<f64> = t.iter().map(|&x| f(x)).collect();
        for x in [0.05, 0.3, 0.77, 0.99, 1.1] {
            assert!((apply(&spline_weights(&t, x), &y) - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_interpolates_samples() {
        let t = [0.0, 0.2, 0.3, 0.7, 1.0];
        for (k, &x) in t.iter().enumerate() {
            let w = spline_weights(&t, x);
            for (j, wj) in w.iter().enumerate() {
                assert!((wj - if j == k { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spline_weights_sum_to_one() {
        let t = [0.0, 0.25, 0.5, 0.75, 1.0];
        let w = spline_weights(&t, 0.6);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn short_spline_falls_back_to_polynomials() {
        assert_eq!(spline_weights(&[0.3], 0.9), vec![1.0]);
        let w = spline_weights(&[0.0, 1.0], 0.25);
        assert!((w[0] - 0.75).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15);
        let t = [0.0, 0.5, 1.0];
        let y: Vec<f64> = t.iter().map(|x| x * x).collect();
        assert!((apply(&spline_weights(&t, 0.3), &y) - 0.09).abs() < 1e-15);
    }

    #[test]
    fn unsorted_samples_keep_their_order() {
        let pts = vec![vec![1.0], vec![0.0], vec![0.5], vec![0.25]];
        let it = Interpolant::fit(InterpMode::Spline1d, &pts, 0.0).unwrap();
        let w = it.weights(&[0.5]);
        assert!((w[2] - 1.0).abs() < 1e-12);
        assert!(Interpolant::fit(InterpMode::Spline1d, &[vec![0.1], vec![0.1]], 0.0).is_err());
    }

    #[test]
    fn ridge_recovers_bicubic_entries() {
        let f = |p: &[f64]| 1.0 + p[0] - 2.0 * p[1] + p[0] * p[1] * p[1] - 0.5 * p[0].powi(3) * p[1].powi(3);
        let pts: Vec<Vec<f64>> = (0..6)
            .flat_map(|i| (0..6).map(move |j| vec![i as f64 / 5.0, j as f64 / 5.0]))
            .collect();
        let y: Vec<f64> = pts.iter().map(|p| f(p)).collect();
        let it = Interpolant::fit(InterpMode::Ridge2d, &pts, 1e-12).unwrap();
        for q in [[0.33, 0.71], [0.9, 0.1]] {
            let v = apply(&it.weights(&q), &y);
            assert!((v - f(&q)).abs() < 1e-6 * f(&q).abs().max(1.0));
        }
    }

    #[test]
    fn ridge_handles_few_samples() {
        let pts = vec![vec![0.2, 0.3]];
        let it = Interpolant::fit(InterpMode::Ridge2d, &pts, 1e-5).unwrap();
        // A single sample predicts its own value everywhere.
        let w = it.weights(&[0.8, 0.9]);
        assert!((w[0] - 1.0).abs() < 1e-6);
    }
}
