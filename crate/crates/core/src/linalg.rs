//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix; column vectors are `n x 1` matrices.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Square diagonal matrix from complex entries.
pub fn diag(entries: &[Complex64]) -> ComplexMatrix {
    let n = entries.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for (i, &e) in entries.iter().enumerate() {
        m[(i, i)] = e;
    }
    m
}

pub fn diag_real(entries: &[f64]) -> ComplexMatrix {
    let c: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    diag(&c)
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Hermitian part `(m + m^H) / 2`, used to scrub round-off before factorizing.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in nondecreasing order.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Lower Cholesky factor `L` of a Hermitian positive-definite matrix, `m = L L^H`.
/// Only the lower triangle of `m` is read; a non-positive pivot is an error.
pub fn cholesky_lower(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!("Cholesky of a {}x{} matrix", n, m.ncols())));
    }
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0 && pivot.is_finite()) {
            return Err(Error::numeric("matrix is not Hermitian positive definite"));
        }
        let d = pivot.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut acc = m[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / d;
        }
    }
    Ok(l)
}

/// Natural log-determinant of a Hermitian positive-definite matrix via Cholesky.
pub fn logdet_hpd(m: &ComplexMatrix) -> Result<f64> {
    let l = cholesky_lower(&hermitian_part(m))?;
    let value: f64 = (0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::numeric("log-determinant is not finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_values_sorted() {
        let m = diag_real(&[1.0, 5.0, 3.0]);
        assert_eq!(singular_values(&m), vec![5.0, 3.0, 1.0]);
    }

    #[test]
    fn logdet_of_diagonal() {
        let m = diag_real(&[2.0, 3.0]);
        assert!((logdet_hpd(&m).unwrap() - 6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn logdet_rejects_indefinite() {
        let m = diag_real(&[1.0, -1.0]);
        assert!(logdet_hpd(&m).is_err());
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = ComplexMatrix::from_fn(3, 3, |i, j| Complex64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let m = &a * a.adjoint() + ComplexMatrix::identity(3, 3);
        let l = cholesky_lower(&m).unwrap();
        assert!(max_abs_diff(&(&l * l.adjoint()), &m) < 1e-12);
    }

    #[test]
    fn hermitian_eigen_ascending() {
        let m = diag_real(&[4.0, 1.0, 2.0]);
        let (vals, vecs) = hermitian_eigen(&m);
        assert_eq!(vals, vec![1.0, 2.0, 4.0]);
        let rebuilt = &vecs * diag_real(&vals) * vecs.adjoint();
        assert!(max_abs_diff(&rebuilt, &m) < 1e-12);
    }
}
