use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::scalar::Real;

/// Symmetric matrix with a dense diagonal and sparse strictly-upper storage.
///
/// Off-diagonal entries are kept as `(row, col, value)` with `row < col`,
/// sorted lexicographically; the lower triangle is implied by symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix<T> {
    dim: usize,
    diagonal: Vec<T>,
    off_diagonal: Vec<(usize, usize, T)>,
}

impl<T: Real> SparseSymMatrix<T> {
    pub fn new(diagonal: Vec<T>, mut entries: Vec<(usize, usize, T)>) -> Result<Self> {
        let dim = diagonal.len();
        for e in entries.iter_mut() {
            if e.0 > e.1 {
                std::mem::swap(&mut e.0, &mut e.1);
            }
            if e.0 == e.1 {
                return Err(Error::invalid(format!("off-diagonal entry on the diagonal at {}", e.0)));
            }
            if e.1 >= dim {
                return Err(Error::Shape { expected: dim, got: e.1 + 1 });
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        if entries.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::invalid("duplicate off-diagonal entry"));
        }
        entries.retain(|e| e.2 != T::zero());
        Ok(Self {
            dim,
            diagonal,
            off_diagonal: entries,
        })
    }

    /// Trusted constructor: `off` already strictly upper, sorted, unique and zero-free.
    pub(crate) fn from_sorted_parts(diagonal: Vec<T>, off: Vec<(usize, usize, T)>) -> Self {
        debug_assert!(off.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
        Self {
            dim: diagonal.len(),
            diagonal,
            off_diagonal: off,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(vec![T::one(); dim])
    }

    pub fn from_diagonal(diagonal: Vec<T>) -> Self {
        Self {
            dim: diagonal.len(),
            diagonal,
            off_diagonal: Vec::new(),
        }
    }

    /// Keeps the off-diagonal entries of the upper triangle of `a` whose
    /// magnitude is strictly above `threshold`. The diagonal is copied as is.
    pub fn from_dense_thresholded(a: &Matrix<T>, threshold: T) -> Self {
        let dim = a.rows();
        let mut off = Vec::new();
        for i in 0..dim {
            let row = a.row(i);
            for (j, &v) in row.iter().enumerate().skip(i + 1) {
                if v.abs() > threshold {
                    off.push((i, j, v));
                }
            }
        }
        Self {
            dim,
            diagonal: a.diagonal(),
            off_diagonal: off,
        }
    }

    /// Sparse copy of a dense symmetric matrix (exact zeros dropped).
    pub fn from_dense(a: &Matrix<T>) -> Self {
        Self::from_dense_thresholded(a, T::zero())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diagonal
    }

    pub fn off_diagonal(&self) -> &[(usize, usize, T)] {
        &self.off_diagonal
    }

    pub fn nnz_offdiag(&self) -> usize {
        self.off_diagonal.len()
    }

    /// Fraction of the `p²` cells occupied by stored off-diagonal values
    /// (both triangles counted).
    pub fn offdiag_fill(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        2.0 * self.off_diagonal.len() as f64 / (self.dim as f64 * self.dim as f64)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i == j {
            return self.diagonal[i];
        }
        let key = (i.min(j), i.max(j));
        self.off_diagonal
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map_or(T::zero(), |k| self.off_diagonal[k].2)
    }

    pub fn to_dense(&self) -> Matrix<T> {
        let mut m = Matrix::from_diagonal(&self.diagonal);
        for &(i, j, v) in &self.off_diagonal {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.dim, "sparse matrix-vector dimension mismatch");
        let mut out: Vec<T> = self.diagonal.iter().zip(v).map(|(&d, &x)| d * x).collect();
        for &(i, j, a) in &self.off_diagonal {
            out[i] += a * v[j];
            out[j] += a * v[i];
        }
        out
    }

    /// `vᵀ A v`.
    pub fn quad_form(&self, v: &[T]) -> T {
        assert_eq!(v.len(), self.dim);
        let mut acc = T::zero();
        for (&d, &x) in self.diagonal.iter().zip(v) {
            acc += d * x * x;
        }
        let two = T::of(2.0);
        for &(i, j, a) in &self.off_diagonal {
            acc += two * a * v[i] * v[j];
        }
        acc
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            diagonal: self.diagonal.iter().map(|&d| d * s).collect(),
            off_diagonal: self.off_diagonal.iter().map(|&(i, j, v)| (i, j, v * s)).collect(),
        }
    }

    /// Connected components of the off-diagonal pattern. Each component's
    /// indices are ascending; components are ordered by their smallest index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.dim).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(i, j, _) in &self.off_diagonal {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                let (lo, hi) = (a.min(b), a.max(b));
                parent[hi] = lo;
            }
        }
        let mut slot = vec![usize::MAX; self.dim];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.dim {
            let root = find(&mut parent, i);
            if slot[root] == usize::MAX {
                slot[root] = comps.len();
                comps.push(Vec::new());
            }
            comps[slot[root]].push(i);
        }
        comps
    }

    /// Dense sub-blocks for the given index partition (as produced by
    /// [`components`](Self::components)); every off-diagonal entry must fall
    /// inside one block.
    pub fn dense_blocks(&self, parts: &[Vec<usize>]) -> Vec<Matrix<T>> {
        let mut owner = vec![(0usize, 0usize); self.dim];
        let mut blocks: Vec<Matrix<T>> = Vec::with_capacity(parts.len());
        for (b, idx) in parts.iter().enumerate() {
            let mut m = Matrix::zeros(idx.len(), idx.len());
            for (local, &g) in idx.iter().enumerate() {
                owner[g] = (b, local);
                m[(local, local)] = self.diagonal[g];
            }
            blocks.push(m);
        }
        for &(i, j, v) in &self.off_diagonal {
            let (bi, li) = owner[i];
            let (bj, lj) = owner[j];
            assert_eq!(bi, bj, "entry ({i},{j}) crosses a block boundary");
            blocks[bi][(li, lj)] = v;
            blocks[bi][(lj, li)] = v;
        }
        blocks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_follow_the_pattern() {
        let s = SparseSymMatrix::new(vec![1.0; 6], vec![(0, 2, 0.1), (3, 4, 0.2), (2, 5, 0.3)]).unwrap();
        assert_eq!(s.components(), vec![vec![0, 2, 5], vec![1], vec![3, 4]]);
        let blocks = s.dense_blocks(&s.components());
        assert_eq!(blocks[0][(1, 2)], 0.3);
        assert_eq!(blocks[2][(0, 1)], 0.2);
    }

    #[test]
    fn dense_round_trip_and_products() {
        let a = Matrix::from_rows(&[[2.0, 0.0, 1.0], [0.0, 3.0, 0.0], [1.0, 0.0, 4.0]]).unwrap();
        let s = SparseSymMatrix::from_dense(&a);
        assert_eq!(s.nnz_offdiag(), 1);
        assert_eq!(s.to_dense(), a);
        let v = [1.0, -1.0, 2.0];
        assert_eq!(s.mul_vec(&v), a.mul_vec(&v));
        assert_eq!(s.quad_form(&v), 2.0 + 3.0 + 16.0 + 2.0 * 2.0);
        assert_eq!(s.get(2, 0), 1.0);
        assert_eq!(s.get(1, 2), 0.0);
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(SparseSymMatrix::new(vec![1.0; 3], vec![(0, 1, 0.1), (1, 0, 0.2)]).is_err());
        assert!(SparseSymMatrix::new(vec![1.0; 3], vec![(0, 3, 0.1)]).is_err());
    }
}
