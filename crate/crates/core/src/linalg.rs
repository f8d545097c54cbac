//! Eigen- and singular-value decompositions for the solvers and the
//! exact-diagonalization oracle.
//!
//! Both run through faer in f64 whatever the working precision; nalgebra's
//! own tridiagonal QR loses eigenvector accuracy on spectra spanning several
//! decades, which is exactly the regime of the TDVP metric.

use faer::{c64, Mat, Side};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: DVector<T>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub vectors: DMatrix<C<T>>,
}

pub fn hermitian_eigen<T: Real>(m: &DMatrix<C<T>>) -> Result<HermitianEigen<T>> {
    if !m.is_square() {
        return Err(Error::Shape {
            what: "Hermitian matrix columns",
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite("Hermitian matrix entry".into()));
    }
    let a = Mat::<c64>::from_fn(n, n, |i, j| {
        let z = m[(i, j)];
        c64::new(z.re.as_f64(), z.im.as_f64())
    });
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("Hermitian eigendecomposition failed: {e:?}")))?;
    let (u, s) = (eig.U(), eig.S());
    let raw: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenvalue".into()));
    }
    // faer returns ascending order already; sort anyway so the contract does
    // not hinge on it.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw[i].total_cmp(&raw[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| T::of(raw[i])));
    let vectors = DMatrix::from_fn(n, n, |r, c| {
        let z = u[(r, order[c])];
        C::new(T::of(z.re), T::of(z.im))
    });
    Ok(HermitianEigen { values, vectors })
}

/// Minimum-norm least-squares solution of `a x = b`, discarding singular
/// values below `rcond * sigma_max`.
pub fn lstsq_min_norm<T: Real>(a: &DMatrix<T>, b: &DVector<T>, rcond: T) -> Result<DVector<T>> {
    if a.nrows() != b.len() {
        return Err(Error::Shape {
            what: "least-squares right-hand side",
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Ok(DVector::zeros(cols));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares input".into()));
    }
    let fa = Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)].as_f64());
    let svd = fa.thin_svd().map_err(|e| Error::Numeric(format!("SVD failed: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let k = rows.min(cols);
    let s_max = (0..k).map(|i| s[i]).fold(0.0, f64::max);
    let cut = rcond.as_f64() * s_max;
    let mut x = vec![0.0; cols];
    for i in 0..k {
        let sv = s[i];
        if sv <= cut || sv == 0.0 {
            continue;
        }
        let coef = (0..rows).map(|r| u[(r, i)] * b[r].as_f64()).sum::<f64>() / sv;
        for (c, xc) in x.iter_mut().enumerate() {
            *xc += coef * v[(c, i)];
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares solution".into()));
    }
    Ok(DVector::from_iterator(cols, x.into_iter().map(T::of)))
}

/// Euclidean norm, scaled so that huge entries do not overflow.
pub(crate) fn cvec_norm<T: Real>(v: &DVector<C<T>>) -> T {
    let big = v.iter().fold(T::zero(), |acc, z| acc.max(z.re.abs()).max(z.im.abs()));
    if big == T::zero() || !big.is_finite() {
        return big;
    }
    v.iter().fold(T::zero(), |acc, z| acc + (z / big).norm_sqr()).sqrt() * big
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(2.0, 0.0),
            ],
        );
        let e = hermitian_eigen(&m).unwrap();
        assert_relative_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(e.values[1], 3.0, epsilon = 1e-14);
        let lam = DMatrix::from_diagonal(&e.values.map(|v| Complex64::new(v, 0.0)));
        let back = &e.vectors * lam * e.vectors.adjoint();
        assert!((back - m).norm() < 1e-13);
    }

    #[test]
    fn lstsq_returns_minimum_norm_solution() {
        // x + y = 2 has the minimum-norm solution (1, 1).
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let x = lstsq_min_norm(&a, &b, 1e-12).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn lstsq_zero_system() {
        let a = DMatrix::<f64>::zeros(3, 3);
        let b = DVector::zeros(3);
        assert_eq!(lstsq_min_norm(&a, &b, 1e-12).unwrap(), DVector::zeros(3));
    }
}
