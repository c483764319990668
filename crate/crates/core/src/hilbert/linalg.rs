//! Dense complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry of `|M - M†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending,
/// eigenvectors in the matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Operator 2-norm (largest singular value).
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if hermiticity_defect(m) <= 1e-14 * (1.0 + m.camax()) {
        return hermitian_eigenvalues(m)
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
    }
    singular_values(m).into_iter().fold(0.0, f64::max)
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

/// Numerical rank with singular values below `rel_threshold * max` discarded.
pub fn numerical_rank(m: &CMatrix, rel_threshold: f64) -> usize {
    let sv = singular_values(m);
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_threshold * top).count()
}

/// `exp(-i H t)` for Hermitian `H` from its eigen-decomposition.
pub fn unitary_from_eigen(values: &[f64], vectors: &CMatrix, t: f64) -> CMatrix {
    let n = values.len();
    let phases = DVector::from_iterator(n, values.iter().map(|&e| C64::from_polar(1.0, -e * t)));
    let scaled = CMatrix::from_fn(n, n, |r, k| vectors[(r, k)] * phases[k]);
    scaled * vectors.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_pauli_x() {
        let sx = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let (vals, vecs) = hermitian_eigen(&sx);
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let back = &vecs * CMatrix::from_diagonal(&DVector::from_vec(vec![c(-1., 0.), c(1., 0.)])) * vecs.adjoint();
        assert!(max_abs_diff(&back, &sx) < 1e-14);
    }

    #[test]
    fn spectral_norm_of_non_normal_matrix() {
        // [[0, 2], [0, 0]] has singular values (2, 0).
        let m = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(2., 0.), c(0., 0.), c(0., 0.)]);
        assert!((spectral_norm(&m) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn unitary_is_unitary() {
        let h = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., -0.5), c(0., 0.5), c(-2., 0.)]);
        let (v, w) = hermitian_eigen(&h);
        let u = unitary_from_eigen(&v, &w, 0.7);
        let id = CMatrix::identity(2, 2);
        assert!(max_abs_diff(&(u.adjoint() * &u), &id) < 1e-14);
    }
}
