//! Symmetric eigendecomposition. The kernel is nalgebra's solver, reached
//! through [`Real::symmetric_eigen`]; this module orders the spectrum and
//! wraps it in the crate's matrix type.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::scalar::Real;

/// Eigenvalues (descending) and orthonormal eigenvectors (as columns).
#[derive(Debug, Clone)]
pub struct EigenSym<T> {
    values: Vec<T>,
    vectors: Matrix<T>,
}

impl<T: Real> EigenSym<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Eigenvectors stored column-wise, in the order of [`values`](Self::values).
    pub fn vectors(&self) -> &Matrix<T> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> T {
        self.values[0]
    }

    pub fn min_value(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// `V f(Λ) Vᵀ v` for an arbitrary spectral map `f`.
    pub fn apply_spectral(&self, v: &[T], f: impl Fn(T) -> T) -> Vec<T> {
        let n = self.dim();
        let mut coeff = vec![T::zero(); n];
        for i in 0..n {
            let row = self.vectors.row(i);
            for (c, &vij) in coeff.iter_mut().zip(row) {
                *c += vij * v[i];
            }
        }
        for (c, &lam) in coeff.iter_mut().zip(&self.values) {
            *c *= f(lam);
        }
        (0..n)
            .map(|i| crate::scalar::dot(self.vectors.row(i), &coeff))
            .collect()
    }

    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix<T> {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for k in 0..n {
                    s += self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)];
                }
                out[(i, j)] = s;
            }
        }
        out
    }
}

pub fn eigen_sym<T: Real>(a: &Matrix<T>) -> Result<EigenSym<T>> {
    let a = a.symmetrized()?;
    let n = a.rows();
    if n == 0 {
        return Err(Error::domain("cannot decompose an empty matrix"));
    }
    let Some((d, v)) = T::symmetric_eigen(n, a.as_slice()) else {
        // the solver does not expose its final residual; report the starting one
        let off: f64 = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].as_f64().powi(2))
            .sum();
        return Err(Error::NoConvergence {
            residual: (2.0 * off).sqrt(),
        });
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[y].partial_cmp(&d[x]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, col)] = v[k * n + i];
        }
    }
    Ok(EigenSym { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_known_spectra() {
        let e = eigen_sym(&Matrix::<f64>::identity(2)).unwrap();
        assert_eq!(e.values(), &[1.0, 1.0]);

        let e = eigen_sym(&Matrix::from_diagonal(&[3.0f64, -1.0])).unwrap();
        assert_eq!(e.values(), &[3.0, -1.0]);
        assert!((e.vectors()[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert!((e.vectors()[(1, 1)].abs() - 1.0).abs() < 1e-15);

        // roots of (2-λ)² - 1
        let e = eigen_sym(&Matrix::from_rows(&[[2.0f64, 1.0], [1.0, 2.0]]).unwrap()).unwrap();
        assert!((e.values()[0] - 3.0).abs() < 1e-14);
        assert!((e.values()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn one_by_one() {
        let e = eigen_sym(&Matrix::from_rows(&[[-2.5]]).unwrap()).unwrap();
        assert_eq!(e.values(), &[-2.5]);
    }

    #[test]
    fn reconstructs_and_is_orthonormal() {
        let n = 7;
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let f = |x: usize, y: usize| ((x * 7 + y * 3) % 5) as f64 - 2.0;
                a[(i, j)] = f(i, j) + f(j, i);
            }
        }
        let e = eigen_sym(&a).unwrap();
        assert!(e.reconstruct().frobenius_distance(&a) <= 1e-12 * a.frobenius_norm());
        let v = e.vectors();
        let vtv = v.transpose().matmul(v);
        assert!(vtv.frobenius_distance(&Matrix::identity(n)) < 1e-12);
        assert!(e.values().windows(2).all(|w| w[0] >= w[1]));
    }
}
