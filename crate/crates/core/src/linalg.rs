//! Sparse storage and the dense helpers shared by the reduction modules.

use faer::linalg::solvers::{DenseSolveCore, Solve, SolveCore};
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Compressed sparse column matrix with sorted row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Csc {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

/// Sparsity pattern built from `(row, col)` coordinates, with the map from
/// each input coordinate to its slot in the value array.
#[derive(Debug, Clone)]
pub struct Pattern {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub slot: Vec<usize>,
}

impl Pattern {
    pub fn from_coords(n: usize, coords: &[(usize, usize)]) -> Self {
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_unstable_by_key(|&i| (coords[i].1, coords[i].0));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::new();
        let mut slot = vec![0usize; coords.len()];
        let mut last: Option<(usize, usize)> = None;
        for &i in &order {
            let (r, c) = coords[i];
            if last != Some((r, c)) {
                row_idx.push(r);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
            slot[i] = row_idx.len() - 1;
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        Pattern {
            n,
            col_ptr,
            row_idx,
            slot,
        }
    }

    /// Sums `vals[i]` into the slot of coordinate `i`.
    pub fn gather(&self, vals: &[f64]) -> Csc {
        let mut values = vec![0.0; self.row_idx.len()];
        for (s, v) in self.slot.iter().zip(vals) {
            values[*s] += v;
        }
        Csc {
            nrows: self.n,
            ncols: self.n,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values,
        }
    }
}

impl Csc {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn symbolic(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.nrows, self.ncols, &self.col_ptr, None, &self.row_idx)
    }

    pub fn as_faer(&self) -> SparseColMatRef<'_, usize, f64> {
        SparseColMatRef::new(self.symbolic(), &self.values)
    }

    /// Same pattern, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Csc {
        assert_eq!(values.len(), self.values.len());
        Csc {
            values,
            ..self.clone()
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        match self.row_idx[range.clone()].binary_search(&r) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..self.ncols {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
    }

    /// `A V` for a dense `V`.
    pub fn mul_dense(&self, v: MatRef<'_, f64>) -> Mat<f64> {
        let mut out = Mat::zeros(self.nrows, v.ncols());
        for j in 0..v.ncols() {
            let col = v.col(j);
            let dst = out.col_mut(j);
            let dst = dst.try_as_col_major_mut().unwrap().as_slice_mut();
            for c in 0..self.ncols {
                let xc = col[c];
                if xc == 0.0 {
                    continue;
                }
                for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                    dst[self.row_idx[k]] += self.values[k] * xc;
                }
            }
        }
        out
    }

    /// `V^T A V`, symmetrized.
    pub fn project(&self, v: MatRef<'_, f64>) -> Mat<f64> {
        let av = self.mul_dense(v);
        let mut p = v.transpose() * &av;
        symmetrize(&mut p);
        p
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut d = Mat::zeros(self.nrows, self.ncols);
        for c in 0..self.ncols {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                d[(self.row_idx[k], c)] += self.values[k];
            }
        }
        d
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..self.ncols {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                worst = worst.max((self.values[k] - self.get(c, r)).abs());
            }
        }
        worst
    }
}

/// Sparse Cholesky factor of a symmetric positive definite [`Csc`].
pub struct SparseCholesky {
    llt: Llt<usize, f64>,
    n: usize,
}

impl SparseCholesky {
    pub fn new(a: &Csc) -> Result<Self> {
        let symbolic = SymbolicLlt::try_new(a.symbolic(), Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("symbolic Cholesky: {e:?}")))?;
        let llt = Llt::try_new_with_symbolic(symbolic, a.as_faer(), Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("Cholesky: {e:?}")))?;
        Ok(Self { llt, n: a.nrows })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let m = faer::MatMut::from_column_major_slice_mut(x, self.n, 1);
        self.llt.solve_in_place_with_conj(faer::Conj::No, m);
    }

    pub fn solve_mat(&self, b: &mut Mat<f64>) {
        self.llt.solve_in_place(b.as_mut());
    }
}

/// `(A + A^T) / 2` in place.
pub fn symmetrize(a: &mut Mat<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// `max |V^T V - I|`.
pub fn orthonormality_deviation(v: MatRef<'_, f64>) -> f64 {
    let g = v.transpose() * v;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Thin QR with a positive diagonal in `R`, so the factorization is unique.
pub fn thin_qr(v: MatRef<'_, f64>) -> (Mat<f64>, Mat<f64>) {
    let qr = v.qr();
    let mut q = qr.compute_thin_Q();
    let mut r = qr.thin_R().to_owned();
    for j in 0..r.nrows() {
        if r[(j, j)] < 0.0 {
            for k in 0..r.ncols() {
                r[(j, k)] = -r[(j, k)];
            }
            for i in 0..q.nrows() {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    (q, r)
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
///
/// Runs the implicit QR iteration on the tridiagonal form at every size:
/// the divide-and-conquer path of the default solver loses eigenvector
/// accuracy on the strongly graded spectra of finite element pencils.
pub fn sym_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::evd::{self, ComputeEigenvectors, SelfAdjointEvdParams};
    use faer::{Auto, Par, Spec};

    let n = a.nrows();
    let params = SelfAdjointEvdParams {
        recursion_threshold: usize::MAX,
        ..<SelfAdjointEvdParams as Auto<f64>>::auto()
    };
    let params: Spec<SelfAdjointEvdParams, f64> = params.into();
    let mut s = faer::diag::Diag::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(n, ComputeEigenvectors::Yes, Par::Seq, params));
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        Some(u.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        params,
    )
    .map_err(|e| Error::LinearAlgebra(format!("symmetric eigensolver: {e:?}")))?;
    let vals = (0..n).map(|i| s[i]).collect();
    Ok((vals, u))
}

/// All eigenpairs of `K phi = lambda M phi` for dense symmetric `K` and
/// positive definite `M`, eigenvalues ascending, vectors `M`-orthonormal.
pub fn generalized_eigen_dense(k: MatRef<'_, f64>, m: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let llt = m
        .llt(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("mass matrix not positive definite: {e:?}")))?;
    let l = llt.L();
    // A = L^-1 K L^-T
    let mut a = k.to_owned();
    l.solve_lower_triangular_in_place(a.as_mut());
    let mut a = a.transpose().to_owned();
    l.solve_lower_triangular_in_place(a.as_mut());
    symmetrize(&mut a);
    let (vals, mut y) = sym_eigen(a.as_ref())?;
    // phi = L^-T y
    l.transpose().solve_upper_triangular_in_place(y.as_mut());
    Ok((vals, y))
}

/// Singular values of `a`, descending.
pub fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    a.singular_values()
        .map_err(|e| Error::LinearAlgebra(format!("SVD: {e:?}")))
}

/// 2-norm condition number.
pub fn condition_number(a: MatRef<'_, f64>) -> Result<f64> {
    let s = singular_values(a)?;
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

pub fn inverse(a: MatRef<'_, f64>) -> Mat<f64> {
    a.partial_piv_lu().inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> Csc {
        let mut coords = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            coords.push((i, i));
            vals.push(2.0);
            if i + 1 < n {
                coords.push((i, i + 1));
                vals.push(-1.0);
                coords.push((i + 1, i));
                vals.push(-1.0);
            }
        }
        // Duplicate entry exercises summation.
        coords.push((0, 0));
        vals.push(1.0);
        Pattern::from_coords(n, &coords).gather(&vals)
    }

    #[test]
    fn pattern_sums_duplicates() {
        let a = laplacian(5);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(2, 1), -1.0);
        assert_eq!(a.get(4, 0), 0.0);
        assert_eq!(a.max_asymmetry(), 0.0);
        assert_eq!(a.nnz(), 13);
    }

    #[test]
    fn cholesky_solves() {
        let a = laplacian(30);
        let chol = SparseCholesky::new(&a).unwrap();
        let x_true: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let mut b = vec![0.0; 30];
        a.matvec(&x_true, &mut b);
        chol.solve_in_place(&mut b);
        for (x, y) in b.iter().zip(&x_true) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_generalized_eigen_diagonal() {
        let k = Mat::from_fn(2, 2, |i, j| if i == j { [1.0, 4.0][i] } else { 0.0 });
        let m = Mat::<f64>::identity(2, 2);
        let (vals, vecs) = generalized_eigen_dense(k.as_ref(), m.as_ref()).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 4.0).abs() < 1e-14);
        assert!(orthonormality_deviation(vecs.as_ref()) < 1e-14);
    }

    #[test]
    fn qr_has_positive_diagonal() {
        let v = Mat::from_fn(6, 3, |i, j| ((i * 3 + j) as f64).cos() - 0.1 * i as f64);
        let (q, r) = thin_qr(v.as_ref());
        assert!((0..3).all(|j| r[(j, j)] > 0.0));
        let back = &q * &r;
        assert!((0..6).all(|i| (0..3).all(|j| (back[(i, j)] - v[(i, j)]).abs() < 1e-13)));
        assert!(orthonormality_deviation(q.as_ref()) < 1e-14);
    }
}
