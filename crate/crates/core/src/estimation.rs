//! Sample statistics and the thresholding estimators built on them.
//!
//! The pooled covariance uses divisor `n` (maximum likelihood), not `n - K`.
//! Thresholds keep entries strictly above the cut: `|s_jl| > t_n`,
//! `|δ̂_j| > a_n`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::numerics::{cholesky_spd, eigen_sym, Matrix, SparseSymMatrix, SpdFactor};
use crate::scalar::Real;

/// Default relative eigenvalue floor for non-positive-definite `Σ̃`.
pub const DEFAULT_FLOOR_EPS: f64 = 1e-8;

/// Off-diagonal fill above which `Σ̃` is factored densely.
pub const DENSE_FILL_THRESHOLD: f64 = 0.05;

/// Below this dimension the pooled covariance is accumulated on one thread.
const PARALLEL_COV_MIN_DIM: usize = 192;

/// Class means and the pooled covariance of a dataset.
#[derive(Debug, Clone)]
pub struct ClassSummary<T> {
    pub class_means: Vec<Vec<T>>,
    pub pooled_cov: Matrix<T>,
    pub class_counts: Vec<usize>,
}

impl<T: Real> ClassSummary<T> {
    pub fn n(&self) -> usize {
        self.class_counts.iter().sum()
    }

    pub fn p(&self) -> usize {
        self.pooled_cov.rows()
    }

    /// `x̄_k - x̄_l` (1-based classes).
    pub fn delta_between(&self, k: usize, l: usize) -> Vec<T> {
        let (a, b) = (&self.class_means[k - 1], &self.class_means[l - 1]);
        a.iter().zip(b).map(|(&x, &y)| x - y).collect()
    }

    /// `(x̄_k + x̄_l)/2`.
    pub fn mid_between(&self, k: usize, l: usize) -> Vec<T> {
        let (a, b) = (&self.class_means[k - 1], &self.class_means[l - 1]);
        let half = T::of(0.5);
        a.iter().zip(b).map(|(&x, &y)| (x + y) * half).collect()
    }

    /// `δ̂ = x̄_1 - x̄_2`.
    pub fn delta_hat(&self) -> Vec<T> {
        self.delta_between(1, 2)
    }

    /// `x̄ = (x̄_1 + x̄_2)/2`.
    pub fn grand_mid(&self) -> Vec<T> {
        self.mid_between(1, 2)
    }
}

/// Per-class feature means, indexed by class `k - 1`.
pub fn class_means<T: Real>(dataset: &Dataset<T>) -> Vec<Vec<T>> {
    let p = dataset.p();
    let mut sums = vec![vec![T::zero(); p]; dataset.num_classes()];
    for (i, &l) in dataset.labels().iter().enumerate() {
        for (s, &x) in sums[l - 1].iter_mut().zip(dataset.row(i)) {
            *s += x;
        }
    }
    for (s, &n_k) in sums.iter_mut().zip(dataset.class_counts()) {
        let inv = T::of_usize(n_k);
        for v in s.iter_mut() {
            *v /= inv;
        }
    }
    sums
}

/// Rows of the dataset centered at their own class mean (`n × p`).
pub fn centered_rows<T: Real>(dataset: &Dataset<T>, means: &[Vec<T>]) -> Matrix<T> {
    let (n, p) = (dataset.n(), dataset.p());
    let mut c = Matrix::zeros(n, p);
    for i in 0..n {
        let m = &means[dataset.labels()[i] - 1];
        for ((o, &x), &mu) in c.row_mut(i).iter_mut().zip(dataset.row(i)).zip(m) {
            *o = x - mu;
        }
    }
    c
}

/// `S = (1/n) Σ_k Σ_i (x_ki - x̄_k)(x_ki - x̄_k)ᵀ`.
pub fn pooled_covariance<T: Real>(centered: &Matrix<T>) -> Matrix<T> {
    let (n, p) = (centered.rows(), centered.cols());
    let inv_n = T::one() / T::of_usize(n);
    let mut s = Matrix::zeros(p, p);
    // Row j of the upper triangle; each entry sums over samples in index order,
    // so the result does not depend on how rows are spread over threads.
    let fill_row = |j: usize, out: &mut [T]| {
        for i in 0..n {
            let c = centered.row(i);
            let cj = c[j];
            if cj == T::zero() {
                continue;
            }
            for (o, &ck) in out[j..].iter_mut().zip(&c[j..]) {
                *o += cj * ck;
            }
        }
        for o in out[j..].iter_mut() {
            *o *= inv_n;
        }
    };
    if p >= PARALLEL_COV_MIN_DIM {
        s.as_mut_slice()
            .par_chunks_mut(p)
            .enumerate()
            .for_each(|(j, r)| fill_row(j, r));
    } else {
        for (j, r) in s.as_mut_slice().chunks_mut(p).enumerate() {
            fill_row(j, r);
        }
    }
    for j in 0..p {
        for k in (j + 1)..p {
            s[(k, j)] = s[(j, k)];
        }
    }
    s
}

pub fn summarize<T: Real>(dataset: &Dataset<T>) -> ClassSummary<T> {
    let class_means = class_means(dataset);
    let centered = centered_rows(dataset, &class_means);
    ClassSummary {
        pooled_cov: pooled_covariance(&centered),
        class_means,
        class_counts: dataset.class_counts().to_vec(),
    }
}

fn log_p_over_n(n: usize, p: usize) -> Result<f64> {
    if p < 2 {
        return Err(Error::domain(format!("thresholds need p ≥ 2, got p = {p}")));
    }
    if n < 1 {
        return Err(Error::domain("thresholds need n ≥ 1"));
    }
    Ok((p as f64).ln() / n as f64)
}

/// Covariance threshold `t_n = M1·sqrt(ln p / n)`.
pub fn compute_tn(m1: f64, n: usize, p: usize) -> Result<f64> {
    Ok(m1 * log_p_over_n(n, p)?.sqrt())
}

/// Mean-difference threshold `a_n = M2·(ln p / n)^alpha`, `alpha ∈ (0, 1/2)`.
pub fn compute_an(m2: f64, n: usize, p: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::domain(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    Ok(m2 * log_p_over_n(n, p)?.powf(alpha))
}

/// `Σ̃`: off-diagonal entries of `s` kept iff `|s_jl| > t`; diagonal untouched.
pub fn threshold_covariance<T: Real>(s: &Matrix<T>, t: T) -> SparseSymMatrix<T> {
    threshold_entries(s.rows(), t, |j, l| s[(j, l)])
}

/// Builds a thresholded symmetric matrix from an entry function, scanning
/// the upper triangle row by row (in parallel for large `p`).
pub fn threshold_entries<T: Real>(p: usize, t: T, entry: impl Fn(usize, usize) -> T + Sync) -> SparseSymMatrix<T> {
    let row = |j: usize| -> Vec<(usize, usize, T)> {
        ((j + 1)..p)
            .filter_map(|l| {
                let v = entry(j, l);
                (v.abs() > t).then_some((j, l, v))
            })
            .collect()
    };
    let off: Vec<_> = if p >= PARALLEL_COV_MIN_DIM {
        (0..p).into_par_iter().map(row).collect::<Vec<_>>().concat()
    } else {
        (0..p).flat_map(row).collect()
    };
    let diagonal = (0..p).map(|j| entry(j, j)).collect();
    SparseSymMatrix::from_sorted_parts(diagonal, off)
}

/// Read access to the class statistics an SLDA fit needs.
pub trait ClassStatistics<T: Real>: Sync {
    fn n(&self) -> usize;
    fn p(&self) -> usize;
    fn num_classes(&self) -> usize;
    /// `x̄_k - x̄_l` (1-based classes).
    fn delta_between(&self, k: usize, l: usize) -> Vec<T>;
    /// `(x̄_k + x̄_l)/2`.
    fn mid_between(&self, k: usize, l: usize) -> Vec<T>;
    /// Pooled covariance with off-diagonal entries at or below `t` dropped.
    fn thresholded_covariance(&self, t: T) -> SparseSymMatrix<T>;
    /// All pooled-covariance entries `|s_jl|`, `j < l`, or a deterministic
    /// stride sample of them when there are more than `limit`.
    fn offdiag_magnitudes(&self, limit: usize) -> Vec<T>;
}

fn strided_upper<T: Real>(p: usize, limit: usize, entry: impl Fn(usize, usize) -> T) -> Vec<T> {
    let total = p * p.saturating_sub(1) / 2;
    let stride = total.div_ceil(limit.max(1)).max(1);
    let mut out = Vec::with_capacity(total.min(limit));
    let mut idx = 0usize;
    for j in 0..p {
        for l in (j + 1)..p {
            if idx.is_multiple_of(stride) {
                out.push(entry(j, l).abs());
            }
            idx += 1;
        }
    }
    out
}

impl<T: Real> ClassStatistics<T> for ClassSummary<T> {
    fn n(&self) -> usize {
        ClassSummary::n(self)
    }

    fn p(&self) -> usize {
        ClassSummary::p(self)
    }

    fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    fn delta_between(&self, k: usize, l: usize) -> Vec<T> {
        ClassSummary::delta_between(self, k, l)
    }

    fn mid_between(&self, k: usize, l: usize) -> Vec<T> {
        ClassSummary::mid_between(self, k, l)
    }

    fn thresholded_covariance(&self, t: T) -> SparseSymMatrix<T> {
        threshold_covariance(&self.pooled_cov, t)
    }

    fn offdiag_magnitudes(&self, limit: usize) -> Vec<T> {
        strided_upper(self.p(), limit, |j, l| self.pooled_cov[(j, l)])
    }
}

/// Statistics of a dataset with one sample removed, as a rank-one downdate
/// of the full-data summary. With `d = x_i - x̄_k` for the removed sample of
/// class `k`, the class mean moves by `-d/(n_k - 1)` and
/// `(n - 1) S' = n S - n_k/(n_k - 1) · d dᵀ`.
#[derive(Debug, Clone)]
pub struct LeaveOneOut<'a, T> {
    base: &'a ClassSummary<T>,
    d: Vec<T>,
    weight: T,
    class_means: Vec<Vec<T>>,
}

impl<'a, T: Real> LeaveOneOut<'a, T> {
    /// `class` is 1-based and must have at least 3 samples in `base`.
    pub fn new(base: &'a ClassSummary<T>, x: &[T], class: usize) -> Result<Self> {
        if class == 0 || class > base.class_counts.len() {
            return Err(Error::invalid(format!("class {class} out of range")));
        }
        if x.len() != base.p() {
            return Err(Error::Shape {
                expected: base.p(),
                got: x.len(),
            });
        }
        let n_k = base.class_counts[class - 1];
        if n_k < 3 {
            return Err(Error::invalid(format!(
                "leaving one out of class {class} needs at least 3 samples, found {n_k}"
            )));
        }
        let mean = &base.class_means[class - 1];
        let d: Vec<T> = x.iter().zip(mean).map(|(&a, &m)| a - m).collect();
        let shrink = T::one() / T::of_usize(n_k - 1);
        let mut class_means = base.class_means.clone();
        for (m, &dj) in class_means[class - 1].iter_mut().zip(&d) {
            *m -= dj * shrink;
        }
        Ok(Self {
            base,
            d,
            weight: T::of_usize(n_k) * shrink,
            class_means,
        })
    }

    /// Downdated pooled-covariance entry `s'_jl`.
    #[inline]
    pub fn covariance_entry(&self, j: usize, l: usize) -> T {
        let n = self.base.n();
        (T::of_usize(n) * self.base.pooled_cov[(j, l)] - self.weight * self.d[j] * self.d[l]) / T::of_usize(n - 1)
    }
}

impl<T: Real> ClassStatistics<T> for LeaveOneOut<'_, T> {
    fn n(&self) -> usize {
        self.base.n() - 1
    }

    fn p(&self) -> usize {
        self.base.p()
    }

    fn num_classes(&self) -> usize {
        self.class_means.len()
    }

    fn delta_between(&self, k: usize, l: usize) -> Vec<T> {
        let (a, b) = (&self.class_means[k - 1], &self.class_means[l - 1]);
        a.iter().zip(b).map(|(&x, &y)| x - y).collect()
    }

    fn mid_between(&self, k: usize, l: usize) -> Vec<T> {
        let (a, b) = (&self.class_means[k - 1], &self.class_means[l - 1]);
        let half = T::of(0.5);
        a.iter().zip(b).map(|(&x, &y)| (x + y) * half).collect()
    }

    fn thresholded_covariance(&self, t: T) -> SparseSymMatrix<T> {
        threshold_entries(self.p(), t, |j, l| self.covariance_entry(j, l))
    }

    fn offdiag_magnitudes(&self, limit: usize) -> Vec<T> {
        strided_upper(self.p(), limit, |j, l| self.covariance_entry(j, l))
    }
}

/// `δ̃` together with the indices that survived thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdedDelta<T> {
    pub values: Vec<T>,
    pub kept: Vec<usize>,
}

impl<T> ThresholdedDelta<T> {
    /// `q̂`, the number of kept components.
    pub fn q_hat(&self) -> usize {
        self.kept.len()
    }
}

pub fn threshold_delta<T: Real>(delta_hat: &[T], a: T) -> ThresholdedDelta<T> {
    let mut values = vec![T::zero(); delta_hat.len()];
    let mut kept = Vec::new();
    for (j, &d) in delta_hat.iter().enumerate() {
        if d.abs() > a {
            values[j] = d;
            kept.push(j);
        }
    }
    ThresholdedDelta { values, kept }
}

/// How an [`InverseOperator`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InverseKind {
    Cholesky,
    /// Eigenvalues floored at `floor_eps · λ_max`.
    EigenFloor { floor_eps: f64 },
    /// Moore–Penrose inverse with relative cutoff `rtol`.
    Pseudo { rtol: f64 },
}

/// Which factorization route [`invert_sparse_sym_via`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorPath {
    /// Dense above [`DENSE_FILL_THRESHOLD`] fill, block-sparse below.
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Clone)]
struct SpectralBlock<T> {
    indices: Vec<usize>,
    /// Retained eigenvectors as columns (`indices.len() × r`).
    vectors: Matrix<T>,
    inv_values: Vec<T>,
}

impl<T: Real> SpectralBlock<T> {
    fn apply_into(&self, v: &[T], out: &mut [T]) {
        let r = self.inv_values.len();
        let mut coeff = vec![T::zero(); r];
        for (a, &g) in self.indices.iter().enumerate() {
            let vg = v[g];
            if vg == T::zero() {
                continue;
            }
            for (c, &u) in coeff.iter_mut().zip(self.vectors.row(a)) {
                *c += u * vg;
            }
        }
        for (c, &s) in coeff.iter_mut().zip(&self.inv_values) {
            *c *= s;
        }
        for (a, &g) in self.indices.iter().enumerate() {
            out[g] = crate::scalar::dot(self.vectors.row(a), &coeff);
        }
    }
}

#[derive(Debug, Clone)]
enum Payload<T> {
    Factor(SpdFactor<T>),
    Spectral(Vec<SpectralBlock<T>>),
}

/// Linear map standing in for `Σ̂⁻¹`.
#[derive(Debug, Clone)]
pub struct InverseOperator<T> {
    kind: InverseKind,
    dim: usize,
    payload: Payload<T>,
    pd_flag: bool,
    floor_count: usize,
    zero_operator: bool,
}

impl<T: Real> InverseOperator<T> {
    pub fn kind(&self) -> InverseKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when the source matrix was factored as positive definite.
    pub fn pd_flag(&self) -> bool {
        self.pd_flag
    }

    /// Number of eigenvalues raised to the floor (eigen-floor route only).
    pub fn floor_count(&self) -> usize {
        self.floor_count
    }

    /// True when every eigenvalue fell below the pseudo-inverse cutoff.
    pub fn is_zero_operator(&self) -> bool {
        self.zero_operator
    }

    /// Number of retained spectral components (equals the dimension for Cholesky).
    pub fn rank(&self) -> usize {
        match &self.payload {
            Payload::Factor(_) => self.dim,
            Payload::Spectral(blocks) => blocks.iter().map(|b| b.inv_values.len()).sum(),
        }
    }

    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: v.len(),
            });
        }
        match &self.payload {
            Payload::Factor(f) => f.solve(v),
            Payload::Spectral(blocks) => {
                let mut out = vec![T::zero(); self.dim];
                for b in blocks {
                    b.apply_into(v, &mut out);
                }
                Ok(out)
            }
        }
    }

    /// Wraps a Cholesky factor of the matrix to be inverted.
    pub fn from_factor(f: SpdFactor<T>) -> Self {
        Self {
            kind: InverseKind::Cholesky,
            dim: f.dim(),
            payload: Payload::Factor(f),
            pd_flag: true,
            floor_count: 0,
            zero_operator: false,
        }
    }
}

/// Inverse of a thresholded covariance. Tries Cholesky first; if the matrix
/// is not positive definite, falls back to an eigendecomposition with
/// eigenvalues floored at `floor_eps · λ_max`.
pub fn invert_sparse_sym<T: Real>(sigma: &SparseSymMatrix<T>, floor_eps: f64) -> Result<InverseOperator<T>> {
    invert_sparse_sym_via(sigma, floor_eps, FactorPath::Auto)
}

pub fn invert_sparse_sym_via<T: Real>(
    sigma: &SparseSymMatrix<T>,
    floor_eps: f64,
    path: FactorPath,
) -> Result<InverseOperator<T>> {
    if !(floor_eps > 0.0) {
        return Err(Error::domain(format!("floor_eps must be positive, got {floor_eps}")));
    }
    if sigma.dim() == 0 {
        return Err(Error::domain("cannot invert an empty matrix"));
    }
    let dense = match path {
        FactorPath::Auto => sigma.offdiag_fill() > DENSE_FILL_THRESHOLD,
        FactorPath::Dense => true,
        FactorPath::Sparse => false,
    };
    let attempt = if dense {
        cholesky_spd(&sigma.to_dense())
    } else {
        SpdFactor::from_sparse(sigma)
    };
    match attempt {
        Ok(f) => return Ok(InverseOperator::from_factor(f)),
        Err(Error::NotPositiveDefinite { .. }) => {}
        Err(e) => return Err(e),
    }

    let parts: Vec<Vec<usize>> = if dense {
        vec![(0..sigma.dim()).collect()]
    } else {
        sigma.components()
    };
    let blocks = if dense {
        vec![sigma.to_dense()]
    } else {
        sigma.dense_blocks(&parts)
    };
    let mut eig = Vec::with_capacity(blocks.len());
    for b in &blocks {
        eig.push(eigen_sym(b)?);
    }
    let lambda_max = eig.iter().map(|e| e.max_value()).fold(T::neg_infinity(), T::max);
    if !(lambda_max > T::zero()) {
        return Err(Error::UnusableMatrix(format!(
            "largest eigenvalue {} is not positive",
            lambda_max
        )));
    }
    let floor = T::of(floor_eps) * lambda_max;
    let mut floor_count = 0;
    let mut spectral = Vec::with_capacity(eig.len());
    for (indices, e) in parts.into_iter().zip(eig) {
        let inv_values = e
            .values()
            .iter()
            .map(|&l| {
                if l < floor {
                    floor_count += 1;
                    T::one() / floor
                } else {
                    T::one() / l
                }
            })
            .collect();
        spectral.push(SpectralBlock {
            indices,
            vectors: e.vectors().clone(),
            inv_values,
        });
    }
    Ok(InverseOperator {
        kind: InverseKind::EigenFloor { floor_eps },
        dim: sigma.dim(),
        payload: Payload::Spectral(spectral),
        pd_flag: false,
        floor_count,
        zero_operator: false,
    })
}

/// Default pseudo-inverse cutoff relative to the largest eigenvalue: `p · ε`.
pub fn default_rtol<T: Real>(p: usize) -> f64 {
    p as f64 * T::epsilon().as_f64()
}

fn pseudo_from_spectrum<T: Real>(
    dim: usize,
    values: &[T],
    vector: impl Fn(usize) -> Vec<T>,
    cutoff: T,
    rtol: f64,
) -> InverseOperator<T> {
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i].abs() > cutoff).collect();
    let mut vectors = Matrix::zeros(dim, keep.len());
    let mut inv_values = Vec::with_capacity(keep.len());
    for (c, &i) in keep.iter().enumerate() {
        for (r, x) in vector(i).into_iter().enumerate() {
            vectors[(r, c)] = x;
        }
        inv_values.push(T::one() / values[i]);
    }
    InverseOperator {
        kind: InverseKind::Pseudo { rtol },
        dim,
        zero_operator: keep.is_empty(),
        payload: Payload::Spectral(vec![SpectralBlock {
            indices: (0..dim).collect(),
            vectors,
            inv_values,
        }]),
        pd_flag: false,
        floor_count: 0,
    }
}

/// Moore–Penrose inverse of a symmetric matrix: eigenvalues with
/// `|λ| > rtol · max|λ|` are inverted, the rest are zeroed.
pub fn pseudo_inverse_sym<T: Real>(s: &Matrix<T>, rtol: f64) -> Result<InverseOperator<T>> {
    if !(rtol > 0.0) {
        return Err(Error::domain(format!("rtol must be positive, got {rtol}")));
    }
    let e = eigen_sym(s)?;
    let scale = e.values().iter().fold(T::zero(), |m, &l| m.max(l.abs()));
    let cutoff = T::of(rtol) * scale;
    Ok(pseudo_from_spectrum(s.rows(), e.values(), |i| e.vectors().column(i), cutoff, rtol))
}

/// Moore–Penrose inverse of `S = Cᵀ C / n` for a centered `n × p` matrix `C`,
/// computed from the `n × n` Gram matrix. Same operator as
/// [`pseudo_inverse_sym`] on `S`, at `O(n²p)` cost when `p ≫ n`.
pub fn pseudo_inverse_gram<T: Real>(centered: &Matrix<T>, rtol: f64) -> Result<InverseOperator<T>> {
    if !(rtol > 0.0) {
        return Err(Error::domain(format!("rtol must be positive, got {rtol}")));
    }
    let (n, p) = (centered.rows(), centered.cols());
    let inv_n = T::one() / T::of_usize(n);
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = crate::scalar::dot(centered.row(i), centered.row(j)) * inv_n;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let e = eigen_sym(&g)?;
    let scale = e.values().iter().fold(T::zero(), |m, &l| m.max(l.abs()));
    let cutoff = T::of(rtol) * scale;
    let u = e.vectors();
    let values = e.values().to_vec();
    Ok(pseudo_from_spectrum(
        p,
        &values,
        |k| {
            // v_k = Cᵀ u_k / sqrt(n λ_k)
            let norm = (T::of_usize(n) * values[k]).sqrt();
            let mut v = vec![T::zero(); p];
            for i in 0..n {
                let w = u[(i, k)] / norm;
                for (o, &c) in v.iter_mut().zip(centered.row(i)) {
                    *o += w * c;
                }
            }
            v
        },
        cutoff,
        rtol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_dataset;

    fn toy() -> Dataset<f64> {
        validate_dataset(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [0.0, 4.0]], &[1, 1, 2, 2]).unwrap()
    }

    #[test]
    fn summarize_hand_example() {
        let s = summarize(&toy());
        assert_eq!(s.class_means, vec![vec![1.0, 0.0], vec![0.0, 3.0]]);
        assert_eq!(s.delta_hat(), vec![1.0, -3.0]);
        assert_eq!(s.grand_mid(), vec![0.5, 1.5]);
        assert_eq!(s.pooled_cov, Matrix::from_diagonal(&[0.5, 0.5]));
    }

    #[test]
    fn identical_within_class_gives_zero_covariance() {
        let d = validate_dataset(&[[1.0, 2.0], [1.0, 2.0], [3.0, 0.0], [3.0, 0.0]], &[1, 1, 2, 2]).unwrap();
        assert_eq!(summarize(&d).pooled_cov, Matrix::zeros(2, 2));
    }

    #[test]
    fn duplicating_samples_leaves_statistics_unchanged() {
        let d = toy();
        let twice = d.select(&[0, 1, 2, 3, 0, 1, 2, 3]).unwrap();
        let (a, b) = (summarize(&d), summarize(&twice));
        assert_eq!(a.class_means, b.class_means);
        assert!(a.pooled_cov.frobenius_distance(&b.pooled_cov) < 1e-15);
    }

    #[test]
    fn threshold_formulas() {
        assert_eq!(compute_tn(0.0, 100, 100).unwrap(), 0.0);
        assert!((compute_tn(1.0, 100, 100).unwrap() - 0.214_596_602_628_934_74).abs() < 1e-15);
        assert!((compute_tn(1e7, 72, 7129).unwrap() - 3_510_287.708_040_315).abs() < 1e-6);
        assert_eq!(compute_an(0.0, 100, 100, 0.3).unwrap(), 0.0);
        assert!((compute_an(1.0, 100, 100, 0.3).unwrap() - 0.397_167_501_931_839_5).abs() < 1e-15);
        assert!(compute_tn(1.0, 10, 1).is_err());
        assert!(compute_an(1.0, 10, 10, 0.5).is_err());
        assert!(compute_an(1.0, 10, 10, 0.0).is_err());
    }

    #[test]
    fn covariance_thresholding_examples() {
        let s = Matrix::from_rows(&[[2.0, 0.1], [0.1, 3.0]]).unwrap();
        let t = threshold_covariance(&s, 0.2);
        assert_eq!(t.nnz_offdiag(), 0);
        assert_eq!(t.diagonal(), &[2.0, 3.0]);

        let s = Matrix::from_rows(&[[1.0, 0.3, 0.05], [0.3, 1.0, 0.25], [0.05, 0.25, 1.0]]).unwrap();
        let t = threshold_covariance(&s, 0.2);
        assert_eq!(t.off_diagonal(), &[(0, 1, 0.3), (1, 2, 0.25)]);

        let s = Matrix::from_rows(&[[1.0, 0.0, 0.4], [0.0, 1.0, -0.2], [0.4, -0.2, 1.0]]).unwrap();
        let t = threshold_covariance(&s, 0.0);
        assert_eq!(t.nnz_offdiag(), 2);
        assert_eq!(t.to_dense(), s);
        // ties at the threshold are dropped
        assert_eq!(threshold_covariance(&s, 0.4).nnz_offdiag(), 0);
    }

    #[test]
    fn delta_thresholding_examples() {
        let t = threshold_delta(&[0.5, -0.1, 0.3], 0.2);
        assert_eq!(t.values, vec![0.5, 0.0, 0.3]);
        assert_eq!(t.q_hat(), 2);
        let t = threshold_delta(&[0.5, 0.0, -0.3], 0.0);
        assert_eq!(t.values, vec![0.5, 0.0, -0.3]);
        assert_eq!(t.q_hat(), 2);
        let t = threshold_delta(&[0.5, -0.1, 0.3], 0.5);
        assert_eq!(t.q_hat(), 0);
        assert!(t.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inverse_of_identity_and_near_singular() {
        let op = invert_sparse_sym(&SparseSymMatrix::<f64>::identity(3), DEFAULT_FLOOR_EPS).unwrap();
        assert_eq!(op.kind(), InverseKind::Cholesky);
        assert!(op.pd_flag());
        assert_eq!(op.apply(&[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);

        // exact inverse of [[1, .999], [.999, 1]] is [[1, -.999], [-.999, 1]] / (1 - .999²)
        let m = SparseSymMatrix::new(vec![1.0f64, 1.0], vec![(0, 1, 0.999)]).unwrap();
        let op = invert_sparse_sym(&m, DEFAULT_FLOOR_EPS).unwrap();
        assert_eq!(op.kind(), InverseKind::Cholesky);
        let det = 1.0 - 0.999 * 0.999;
        let col = op.apply(&[1.0, 0.0]).unwrap();
        assert!((col[0] - 1.0 / det).abs() < 1e-8 * 500.0);
        assert!((col[1] + 0.999 / det).abs() < 1e-8 * 500.0);
        assert!((col[0] - 500.25).abs() < 0.01 && (col[1] + 499.75).abs() < 0.01);

        let m = SparseSymMatrix::from_diagonal(vec![2.0, 1e-18]);
        let op = invert_sparse_sym(&m, 1e-8).unwrap();
        assert_eq!(op.pd_flag(), op.kind() == InverseKind::Cholesky);
    }

    #[test]
    fn eigen_floor_fallback() {
        // eigenvalues 3 and -1
        let m = SparseSymMatrix::new(vec![1.0f64, 1.0], vec![(0, 1, 2.0)]).unwrap();
        let op = invert_sparse_sym(&m, 1e-3).unwrap();
        assert!(!op.pd_flag());
        assert_eq!(op.kind(), InverseKind::EigenFloor { floor_eps: 1e-3 });
        assert_eq!(op.floor_count(), 1);
        let a = op.apply(&[1.0, 0.0]).unwrap();
        let b = op.apply(&[0.0, 1.0]).unwrap();
        let ab = op.apply(&[2.0, -3.0]).unwrap();
        for i in 0..2 {
            assert!((ab[i] - (2.0 * a[i] - 3.0 * b[i])).abs() < 1e-9);
        }

        let neg = SparseSymMatrix::from_diagonal(vec![-1.0, -2.0]);
        assert!(matches!(invert_sparse_sym(&neg, 1e-8), Err(Error::UnusableMatrix(_))));
        assert!(invert_sparse_sym(&SparseSymMatrix::<f64>::identity(2), 0.0).is_err());
    }

    #[test]
    fn pseudo_inverse_examples() {
        let op = pseudo_inverse_sym(&Matrix::from_diagonal(&[2.0, 0.0]), 1e-12).unwrap();
        assert_eq!(op.apply(&[1.0, 1.0]).unwrap(), vec![0.5, 0.0]);
        let op = pseudo_inverse_sym(&Matrix::<f64>::identity(3), 1e-12).unwrap();
        assert_eq!(op.rank(), 3);
        let v = op.apply(&[1.0, 2.0, 3.0]).unwrap();
        for (a, b) in v.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let z = pseudo_inverse_sym(&Matrix::<f64>::zeros(2, 2), 1e-12).unwrap();
        assert!(z.is_zero_operator());
        assert_eq!(z.apply(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn leave_one_out_matches_direct_refit() {
        let rows: Vec<Vec<f64>> = (0..9)
            .map(|i| (0..5).map(|j| (((i * 7 + j * 3) % 13) as f64).sin() + j as f64 * 0.1).collect())
            .collect();
        let d = validate_dataset(&rows, &[1, 1, 1, 2, 2, 2, 2, 3, 3]).unwrap();
        let d = d.select(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 7]).unwrap();
        let full = summarize(&d);
        for i in 0..d.n() {
            let loo = LeaveOneOut::new(&full, d.row(i), d.labels()[i]).unwrap();
            let direct = summarize(&d.without_sample(i).unwrap());
            assert_eq!(ClassStatistics::n(&loo), direct.n());
            for (k, l) in [(1, 2), (1, 3), (2, 3)] {
                for (a, b) in loo.delta_between(k, l).iter().zip(direct.delta_between(k, l)) {
                    assert!((a - b).abs() < 1e-13);
                }
            }
            for j in 0..5 {
                for l in 0..5 {
                    assert!((loo.covariance_entry(j, l) - direct.pooled_cov[(j, l)]).abs() < 1e-13);
                }
            }
        }
        // classes 1 and 3 have exactly three members
        assert!(LeaveOneOut::new(&summarize(&toy()), &[0.0, 0.0], 1).is_err());
    }

    #[test]
    fn strided_sample_respects_limit() {
        let s = summarize(&toy());
        assert_eq!(s.offdiag_magnitudes(10).len(), 1);
        let p = 30;
        let m = strided_upper(p, 100, |j, l| (j * p + l) as f64);
        assert!(m.len() <= 100 && m.len() >= 50);
    }
}
