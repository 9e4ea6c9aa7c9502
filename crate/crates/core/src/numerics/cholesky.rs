use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::numerics::sparse::SparseSymMatrix;
use crate::scalar::{dot, Real};

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite matrix.
///
/// The factor is stored as dense lower-triangular blocks over the connected
/// components of the matrix's sparsity pattern. Component indices are kept
/// ascending, so the assembled factor is still lower triangular and equals
/// the dense Cholesky factor exactly (no fill crosses components).
#[derive(Debug, Clone)]
pub struct SpdFactor<T> {
    dim: usize,
    blocks: Vec<FactorBlock<T>>,
    log_determinant: T,
}

#[derive(Debug, Clone)]
struct FactorBlock<T> {
    indices: Vec<usize>,
    lower: Matrix<T>,
}

/// Dense Cholesky of a symmetric matrix. Mild roundoff asymmetry is repaired
/// first; anything larger is an error.
pub fn cholesky_spd<T: Real>(a: &Matrix<T>) -> Result<SpdFactor<T>> {
    let a = a.symmetrized()?;
    if a.rows() == 0 {
        return Err(Error::domain("cannot factor an empty matrix"));
    }
    let lower = dense_lower(&a, 0)?;
    Ok(SpdFactor::assemble(a.rows(), vec![FactorBlock {
        indices: (0..a.rows()).collect(),
        lower,
    }]))
}

/// Lower factor of a dense symmetric matrix; `offset` only relabels the
/// failing pivot. `a` is read from its lower triangle.
fn dense_lower<T: Real>(a: &Matrix<T>, offset: usize) -> Result<Matrix<T>> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let lj = l.row(j)[..j].to_vec();
        let pivot = a[(j, j)] - dot(&lj, &lj);
        if !(pivot > T::zero()) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite {
                pivot: offset + j,
                value: pivot.as_f64(),
            });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let v = (a[(i, j)] - dot(&l.row(i)[..j], &lj)) / d;
            l[(i, j)] = v;
        }
    }
    Ok(l)
}

impl<T: Real> SpdFactor<T> {
    /// Factors a sparse symmetric matrix block by block over its components.
    pub fn from_sparse(a: &SparseSymMatrix<T>) -> Result<Self> {
        if a.dim() == 0 {
            return Err(Error::domain("cannot factor an empty matrix"));
        }
        let parts = a.components();
        let dense = a.dense_blocks(&parts);
        let mut blocks = Vec::with_capacity(parts.len());
        for (indices, block) in parts.into_iter().zip(dense) {
            let lower = dense_lower(&block, 0).map_err(|e| match e {
                Error::NotPositiveDefinite { pivot, value } => Error::NotPositiveDefinite {
                    pivot: indices[pivot],
                    value,
                },
                other => other,
            })?;
            blocks.push(FactorBlock { indices, lower });
        }
        Ok(Self::assemble(a.dim(), blocks))
    }

    fn assemble(dim: usize, blocks: Vec<FactorBlock<T>>) -> Self {
        let two = T::of(2.0);
        let log_determinant = blocks
            .iter()
            .flat_map(|b| b.lower.diagonal())
            .map(|d| two * d.ln())
            .sum();
        Self {
            dim,
            blocks,
            log_determinant,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log_determinant(&self) -> T {
        self.log_determinant
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    fn check(&self, v: &[T]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        self.check(b)?;
        let mut x = vec![T::zero(); self.dim];
        for blk in &self.blocks {
            let l = &blk.lower;
            let m = blk.indices.len();
            let mut y: Vec<T> = blk.indices.iter().map(|&g| b[g]).collect();
            for i in 0..m {
                let s = y[i] - dot(&l.row(i)[..i], &y[..i]);
                y[i] = s / l[(i, i)];
            }
            for i in (0..m).rev() {
                let mut s = y[i];
                for k in (i + 1)..m {
                    s -= l[(k, i)] * y[k];
                }
                y[i] = s / l[(i, i)];
            }
            for (&g, v) in blk.indices.iter().zip(y) {
                x[g] = v;
            }
        }
        Ok(x)
    }

    /// `L z`.
    pub fn mul_lower(&self, z: &[T]) -> Result<Vec<T>> {
        self.check(z)?;
        let mut out = vec![T::zero(); self.dim];
        for blk in &self.blocks {
            let zl: Vec<T> = blk.indices.iter().map(|&g| z[g]).collect();
            for (i, &g) in blk.indices.iter().enumerate() {
                out[g] = dot(&blk.lower.row(i)[..=i], &zl[..=i]);
            }
        }
        Ok(out)
    }

    /// `Lᵀ w`; its squared norm is `wᵀ A w`.
    pub fn mul_lower_transpose(&self, w: &[T]) -> Result<Vec<T>> {
        self.check(w)?;
        let mut out = vec![T::zero(); self.dim];
        for blk in &self.blocks {
            let m = blk.indices.len();
            let wl: Vec<T> = blk.indices.iter().map(|&g| w[g]).collect();
            let mut acc = vec![T::zero(); m];
            for (i, &wi) in wl.iter().enumerate() {
                for (a, &lik) in acc.iter_mut().zip(&blk.lower.row(i)[..=i]) {
                    *a += lik * wi;
                }
            }
            for (&g, v) in blk.indices.iter().zip(acc) {
                out[g] = v;
            }
        }
        Ok(out)
    }

    /// The full lower-triangular factor as a dense matrix.
    pub fn to_dense_lower(&self) -> Matrix<T> {
        let mut out = Matrix::zeros(self.dim, self.dim);
        for blk in &self.blocks {
            for (a, &gi) in blk.indices.iter().enumerate() {
                for (b, &gj) in blk.indices.iter().enumerate().take(a + 1) {
                    out[(gi, gj)] = blk.lower[(a, b)];
                }
            }
        }
        out
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> Matrix<T> {
        let l = self.to_dense_lower();
        l.matmul(&l.transpose())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal_cases() {
        let f = cholesky_spd(&Matrix::<f64>::identity(3)).unwrap();
        assert_eq!(f.to_dense_lower(), Matrix::identity(3));
        assert_eq!(f.log_determinant(), 0.0);

        let f = cholesky_spd(&Matrix::from_rows(&[[4.0, 0.0], [0.0, 9.0]]).unwrap()).unwrap();
        assert_eq!(f.to_dense_lower(), Matrix::from_diagonal(&[2.0, 3.0]));
        assert!((f.log_determinant() - 36f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_hand_elimination() {
        // l11 = √2, l21 = 1/√2, l22 = √(2 - 1/2)
        let f = cholesky_spd(&Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap()).unwrap();
        let l = f.to_dense_lower();
        assert!((l[(0, 0)] - 2f64.sqrt()).abs() < 1e-15);
        assert!((l[(1, 0)] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((l[(1, 1)] - 1.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(0, 0)] - 2f64.sqrt()).abs() < 1e-15 && (l[(1, 1)] - 1.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn reports_failing_pivot() {
        let a = Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 2.0], [0.0, 2.0, 1.0]]).unwrap();
        match cholesky_spd(&a) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("unexpected {other:?}"),
        }
        let s = SparseSymMatrix::from_dense(&a);
        match SpdFactor::from_sparse(&s) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sparse_blocks_equal_dense_factor() {
        let a = Matrix::from_rows(&[
            [4.0f64, 0.0, 1.0, 0.0],
            [0.0, 2.0, 0.0, 0.5],
            [1.0, 0.0, 3.0, 0.0],
            [0.0, 0.5, 0.0, 1.0],
        ])
        .unwrap();
        let dense = cholesky_spd(&a).unwrap();
        let sparse = SpdFactor::from_sparse(&SparseSymMatrix::from_dense(&a)).unwrap();
        assert_eq!(sparse.block_count(), 2);
        assert!(dense.to_dense_lower().frobenius_distance(&sparse.to_dense_lower()) < 1e-14);
        assert!((dense.log_determinant() - sparse.log_determinant()).abs() < 1e-14);
        let b = [1.0, 2.0, 3.0, 4.0];
        let x = sparse.solve(&b).unwrap();
        let back = a.mul_vec(&x);
        for (u, v) in back.iter().zip(b) {
            assert!((u - v).abs() < 1e-13);
        }
        let w = [0.3, -1.0, 2.0, 0.5];
        let lt = sparse.mul_lower_transpose(&w).unwrap();
        let quad: f64 = lt.iter().map(|x| x * x).sum();
        assert!((quad - crate::scalar::dot(&w, &a.mul_vec(&w))).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let f = cholesky_spd(&Matrix::<f64>::identity(2)).unwrap();
        assert!(matches!(f.solve(&[1.0]), Err(Error::Shape { .. })));
        assert!(cholesky_spd(&Matrix::<f64>::zeros(0, 0)).is_err());
    }
}
