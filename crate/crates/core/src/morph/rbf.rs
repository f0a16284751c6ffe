//! Polyharmonic radial basis function interpolation of boundary
//! displacements with a linear polynomial tail.

use faer::linalg::solvers::Solve;
use faer::Mat;

use super::spec::NodalTargets;
use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::Point;

/// Polyharmonic kernel `r^m` for odd `m`, `r^m ln r` for even `m`.
pub fn kernel(r: f64, m: u32) -> f64 {
    if m % 2 == 1 {
        r.powi(m as i32)
    } else if r == 0.0 {
        0.0
    } else {
        r.powi(m as i32) * r.ln()
    }
}

/// Fitted interpolant for one displacement component.
#[derive(Debug, Clone)]
pub struct RbfComponent {
    pub centers: Vec<Point>,
    pub gamma: Vec<f64>,
    /// Coefficients of `[1, x, z]`.
    pub w: [f64; 3],
    pub order: u32,
}

impl RbfComponent {
    /// Solves `[[A, B], [B^T, 0]] [gamma; w] = [q; 0]`.
    pub fn fit(centers: Vec<Point>, values: &[f64], order: u32, component: usize) -> Result<Self> {
        let n = centers.len();
        let b = Mat::from_fn(n, 3, |i, j| match j {
            0 => 1.0,
            1 => centers[i].x,
            _ => centers[i].z,
        });
        let rank = if n == 0 {
            0
        } else {
            let s = singular_values(b.as_ref())?;
            s.iter().filter(|v| **v > 1e-10 * s[0]).count()
        };
        if rank < 3 {
            return Err(Error::RbfSingular {
                component,
                rank,
                count: n,
            });
        }
        let size = n + 3;
        let mut lhs = Mat::zeros(size, size);
        for i in 0..n {
            for j in 0..n {
                lhs[(i, j)] = kernel(centers[i].distance(centers[j]), order);
            }
            for j in 0..3 {
                lhs[(i, n + j)] = b[(i, j)];
                lhs[(n + j, i)] = b[(i, j)];
            }
        }
        let rhs = Mat::from_fn(size, 1, |i, _| if i < n { values[i] } else { 0.0 });
        let sol = lhs.partial_piv_lu().solve(&rhs);
        if (0..size).any(|i| !sol[(i, 0)].is_finite()) {
            return Err(Error::LinearAlgebra(format!("RBF system for component {component} is singular")));
        }
        Ok(RbfComponent {
            gamma: (0..n).map(|i| sol[(i, 0)]).collect(),
            w: [sol[(n, 0)], sol[(n + 1, 0)], sol[(n + 2, 0)]],
            centers,
            order,
        })
    }

    pub fn eval(&self, x: Point) -> f64 {
        let radial: f64 = self
            .centers
            .iter()
            .zip(&self.gamma)
            .map(|(c, g)| g * kernel(x.distance(*c), self.order))
            .sum();
        radial + self.w[0] + self.w[1] * x.x + self.w[2] * x.z
    }

    /// Block-system dimension, centers plus polynomial terms.
    pub fn system_size(&self) -> usize {
        self.centers.len() + 3
    }
}

/// Fits each displacement component on the nodes that prescribe it.
pub fn fit(nodes: &[Point], targets: &NodalTargets, order: u32) -> Result<[RbfComponent; 2]> {
    if order == 0 {
        return Err(Error::InvalidInput("polyharmonic order must be at least 1".into()));
    }
    let fit_axis = |axis: usize| {
        let (centers, values): (Vec<Point>, Vec<f64>) = targets
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t[axis].map(|v| (nodes[i], v)))
            .unzip();
        RbfComponent::fit(centers, &values, order, axis)
    };
    Ok([fit_axis(0)?, fit_axis(1)?])
}
