//! Thin helpers over nalgebra for the Hermitian and real-symmetric
//! decompositions used throughout the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Eigenvalues (ascending) and matching eigenvector columns of a Hermitian
/// matrix.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn symmetric_eigen(a: &RMatrix) -> (Vec<f64>, RMatrix) {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = RMatrix::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `V f(Λ) V†` for a Hermitian matrix.
pub fn hermitian_function(a: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(a);
    let diag = DVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(f(v), 0.0)));
    &vectors * CMatrix::from_diagonal(&diag) * vectors.adjoint()
}

/// Principal square root of a PSD matrix; slightly negative eigenvalues from
/// rounding are treated as zero.
pub fn psd_sqrt(a: &CMatrix) -> CMatrix {
    hermitian_function(a, |v| v.max(0.0).sqrt())
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖A†A − I‖_max`.
pub fn unitarity_defect(a: &CMatrix) -> f64 {
    let g = a.adjoint() * a;
    max_abs(&(g - CMatrix::identity(a.ncols(), a.ncols())))
}

/// `‖A − A†‖_max`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn singular_values(a: &RMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}
