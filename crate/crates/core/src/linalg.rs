//! Small dense complex linear-algebra helpers over nalgebra.

use nalgebra::{Cholesky, DVector};

use crate::graded::{CMatrix, C64};
use crate::tol;

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Numerical rank with threshold `rel · σ_max`.
pub fn rank(m: &CMatrix, rel: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > rel * top).count(),
        _ => 0,
    }
}

pub fn default_rank(m: &CMatrix) -> usize {
    rank(m, tol::RANK_RELATIVE)
}

/// Orthonormal basis (as columns) of the numerical kernel.
pub fn kernel(m: &CMatrix, rel: f64) -> CMatrix {
    let n = m.ncols();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let k = n.max(m.nrows());
    // Pad to square so the SVD returns a full right basis.
    let mut padded = CMatrix::zeros(k, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cols: Vec<DVector<C64>> = (0..svd.singular_values.len())
        .filter(|&i| top == 0.0 || svd.singular_values[i] <= rel * top)
        .map(|i| vt.row(i).adjoint())
        .collect();
    if cols.is_empty() {
        CMatrix::zeros(n, 0)
    } else {
        CMatrix::from_columns(&cols)
    }
}

/// Eigenvalues ascending with matching eigenvector columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Lower factor L with m = L L*.
pub fn cholesky_lower(m: &CMatrix) -> Option<CMatrix> {
    if m.nrows() == 0 {
        return Some(CMatrix::zeros(0, 0));
    }
    Cholesky::new(m.clone()).map(|c| c.l())
}

pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    if m.nrows() == 0 {
        return Some(CMatrix::zeros(0, 0));
    }
    m.clone().try_inverse()
}

pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(f64::INFINITY)
}

pub fn hermitian_defect(m: &CMatrix) -> f64 {
    crate::graded::frobenius(&(m - m.adjoint()))
}
