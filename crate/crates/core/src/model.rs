//! Data types shared across the crate: datasets, populations and fitted rules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SparseSymMatrix, SpdFactor};
use crate::scalar::{dot, Real};

/// Labeled training or test sample. Labels are `1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Matrix<T>,
    labels: Vec<usize>,
    class_counts: Vec<usize>,
}

/// Checks raw rows and labels and assembles a [`Dataset`].
///
/// Every class `1..=K` (with `K` the largest label) needs at least two
/// samples, and at least two classes must be present.
pub fn validate_dataset<T: Real, R: AsRef<[T]>>(rows: &[R], labels: &[i64]) -> Result<Dataset<T>> {
    if rows.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} feature rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    if rows.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    let p = rows[0].as_ref().len();
    if p == 0 {
        return Err(Error::invalid("dataset has no feature columns"));
    }
    let mut data = Vec::with_capacity(rows.len() * p);
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != p {
            return Err(Error::invalid(format!(
                "row {} has {} features, expected {p}",
                i + 1,
                r.len()
            )));
        }
        if let Some(j) = r.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite feature at row {}, column {}",
                i + 1,
                j + 1
            )));
        }
        data.extend_from_slice(r);
    }
    let mut parsed = Vec::with_capacity(labels.len());
    for (i, &l) in labels.iter().enumerate() {
        if l < 1 {
            return Err(Error::invalid(format!(
                "label {l} at row {} is outside 1..K",
                i + 1
            )));
        }
        parsed.push(l as usize);
    }
    let features = Matrix::from_vec(rows.len(), p, data)?;
    Dataset::new(features, parsed)
}

impl<T: Real> Dataset<T> {
    /// Wraps an already-assembled feature matrix. Same checks as
    /// [`validate_dataset`].
    pub fn new(features: Matrix<T>, labels: Vec<usize>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape {
                expected: features.rows(),
                got: labels.len(),
            });
        }
        if let Some(pos) = features.as_slice().iter().position(|x| !x.is_finite()) {
            let (i, j) = (pos / features.cols(), pos % features.cols());
            return Err(Error::invalid(format!(
                "non-finite feature at row {}, column {}",
                i + 1,
                j + 1
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l == 0) {
            return Err(Error::invalid(format!("label 0 at row {} is outside 1..K", i + 1)));
        }
        let k = labels.iter().copied().max().unwrap_or(0);
        let mut class_counts = vec![0usize; k];
        for &l in &labels {
            class_counts[l - 1] += 1;
        }
        let present = class_counts.iter().filter(|&&c| c > 0).count();
        if present < 2 {
            return Err(Error::invalid("need ≥ 2 classes"));
        }
        if let Some(c) = class_counts.iter().position(|&c| c < 2) {
            return Err(Error::invalid(format!(
                "class {} has {} sample(s); every class needs at least 2",
                c + 1,
                class_counts[c]
            )));
        }
        Ok(Self {
            features,
            labels,
            class_counts,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn p(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.features.row(i)
    }

    /// The dataset with sample `i` removed (one leave-one-out fold).
    pub fn without_sample(&self, i: usize) -> Result<Self> {
        self.select(&(0..self.n()).filter(|&j| j != i).collect::<Vec<_>>())
    }

    /// Sub-sample by row indices, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let p = self.p();
        let mut data = Vec::with_capacity(rows.len() * p);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        Self::new(Matrix::from_vec(rows.len(), p, data)?, labels)
    }

    /// Applies `f` to every feature value.
    pub fn map_features(&self, f: impl Fn(T) -> T) -> Self {
        let data = self.features.as_slice().iter().map(|&x| f(x)).collect();
        Self {
            features: Matrix::from_vec(self.n(), self.p(), data).expect("same shape"),
            labels: self.labels.clone(),
            class_counts: self.class_counts.clone(),
        }
    }
}

/// Population family used to generate class samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Normal,
    /// Multivariate t whose scale matrix is the population covariance field.
    StudentT { df: u32 },
}

/// True class means, common covariance (or t scale) and distribution family.
#[derive(Debug, Clone)]
pub struct PopulationSpec<T> {
    means: Vec<Vec<T>>,
    covariance: SparseSymMatrix<T>,
    distribution: Distribution,
    factor: SpdFactor<T>,
}

impl<T: Real> PopulationSpec<T> {
    pub fn new(means: Vec<Vec<T>>, covariance: SparseSymMatrix<T>, distribution: Distribution) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::invalid("a population needs at least 2 classes"));
        }
        let p = covariance.dim();
        for (k, m) in means.iter().enumerate() {
            if m.len() != p {
                return Err(Error::invalid(format!(
                    "mean of class {} has length {}, covariance is {p}×{p}",
                    k + 1,
                    m.len()
                )));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("mean of class {} is not finite", k + 1)));
            }
        }
        for a in 0..means.len() {
            for b in (a + 1)..means.len() {
                if means[a] == means[b] {
                    return Err(Error::invalid(format!(
                        "classes {} and {} have identical means",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        if let Distribution::StudentT { df: 0 } = distribution {
            return Err(Error::domain("t degrees of freedom must be positive"));
        }
        let factor = SpdFactor::from_sparse(&covariance)?;
        Ok(Self {
            means,
            covariance,
            distribution,
            factor,
        })
    }

    pub fn from_dense(means: Vec<Vec<T>>, covariance: &Matrix<T>, distribution: Distribution) -> Result<Self> {
        let cov = covariance.symmetrized()?;
        Self::new(means, SparseSymMatrix::from_dense(&cov), distribution)
    }

    /// Two-class normal population with `μ1 = delta`, `μ2 = 0`.
    pub fn two_class(delta: Vec<T>, covariance: SparseSymMatrix<T>, distribution: Distribution) -> Result<Self> {
        let zero = vec![T::zero(); delta.len()];
        Self::new(vec![delta, zero], covariance, distribution)
    }

    pub fn p(&self) -> usize {
        self.covariance.dim()
    }

    pub fn num_classes(&self) -> usize {
        self.means.len()
    }

    /// Mean of class `k` (1-based).
    pub fn mean(&self, k: usize) -> &[T] {
        &self.means[k - 1]
    }

    pub fn means(&self) -> &[Vec<T>] {
        &self.means
    }

    pub fn covariance(&self) -> &SparseSymMatrix<T> {
        &self.covariance
    }

    pub fn factor(&self) -> &SpdFactor<T> {
        &self.factor
    }

    pub fn distribution(&self) -> Distribution {
        self.distribution
    }

    pub fn is_normal(&self) -> bool {
        self.distribution == Distribution::Normal
    }

    /// `μ_1 - μ_2`.
    pub fn delta(&self) -> Vec<T> {
        self.means[0].iter().zip(&self.means[1]).map(|(&a, &b)| a - b).collect()
    }

    /// `(μ_1 + μ_2)/2`.
    pub fn midpoint(&self) -> Vec<T> {
        let half = T::of(0.5);
        self.means[0].iter().zip(&self.means[1]).map(|(&a, &b)| (a + b) * half).collect()
    }

    pub fn with_distribution(&self, distribution: Distribution) -> Result<Self> {
        Self::new(self.means.clone(), self.covariance.clone(), distribution)
    }
}

/// Two-class linear rule: class 1 iff `wᵀx ≥ c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRule<T> {
    weights: Vec<T>,
    cutoff: T,
    degenerate: bool,
}

impl<T: Real> LinearRule<T> {
    pub fn new(weights: Vec<T>, cutoff: T) -> Self {
        let degenerate = weights.iter().all(|&w| w == T::zero());
        Self {
            weights,
            cutoff,
            degenerate,
        }
    }

    /// `w = direction`, `c = wᵀ midpoint`.
    pub fn through_midpoint(direction: Vec<T>, midpoint: &[T]) -> Self {
        let c = dot(&direction, midpoint);
        Self::new(direction, c)
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `wᵀx - c`; nonnegative means class 1.
    pub fn score(&self, x: &[T]) -> Result<T> {
        if x.len() != self.weights.len() {
            return Err(Error::Shape {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(dot(&self.weights, x) - self.cutoff)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self::new(self.weights.iter().map(|&w| w * s).collect(), self.cutoff * s)
    }

    /// The rule for the exchanged labelling (`w → -w`, `c → -c`).
    pub fn negated(&self) -> Self {
        self.scaled(-T::one())
    }
}

/// Pairwise rules for `K` classes; `(k, l)` with `k < l` (1-based) stores the
/// contrast `k` versus `l`, and the reversed contrast is its negation.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiRule<T> {
    num_classes: usize,
    pairwise: BTreeMap<(usize, usize), LinearRule<T>>,
}

impl<T: Real> MultiRule<T> {
    pub fn new(num_classes: usize, pairwise: BTreeMap<(usize, usize), LinearRule<T>>) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid("a multi-class rule needs at least 2 classes"));
        }
        let mut dim = None;
        for k in 1..=num_classes {
            for l in (k + 1)..=num_classes {
                let rule = pairwise
                    .get(&(k, l))
                    .ok_or_else(|| Error::invalid(format!("missing pairwise rule ({k},{l})")))?;
                match dim {
                    None => dim = Some(rule.dim()),
                    Some(d) if d != rule.dim() => {
                        return Err(Error::Shape {
                            expected: d,
                            got: rule.dim(),
                        })
                    }
                    _ => {}
                }
            }
        }
        if pairwise.len() != num_classes * (num_classes - 1) / 2 {
            return Err(Error::invalid("pairwise rules must be indexed by k < l ≤ K"));
        }
        Ok(Self {
            num_classes,
            pairwise,
        })
    }

    /// Wraps a two-class rule.
    pub fn from_linear(rule: LinearRule<T>) -> Self {
        let mut pairwise = BTreeMap::new();
        pairwise.insert((1, 2), rule);
        Self {
            num_classes: 2,
            pairwise,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.pairwise.values().next().map_or(0, |r| r.dim())
    }

    /// Rule for the contrast `k` vs `l` (`k ≠ l`), negating stored rules when `k > l`.
    pub fn pair(&self, k: usize, l: usize) -> LinearRule<T> {
        if k < l {
            self.pairwise[&(k, l)].clone()
        } else {
            self.pairwise[&(l, k)].negated()
        }
    }

    pub fn pairwise(&self) -> &BTreeMap<(usize, usize), LinearRule<T>> {
        &self.pairwise
    }

    /// Score of contrast `k` vs `l` at `x`.
    pub fn pair_score(&self, k: usize, l: usize, x: &[T]) -> Result<T> {
        if k < l {
            self.pairwise[&(k, l)].score(x)
        } else {
            Ok(-self.pairwise[&(l, k)].score(x)?)
        }
    }
}

/// Threshold constants: `t_n = M1·sqrt(log p / n)`, `a_n = M2·(log p / n)^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub m1: f64,
    pub m2: f64,
    pub alpha: f64,
}

impl ThresholdConfig {
    pub fn new(m1: f64, m2: f64, alpha: f64) -> Result<Self> {
        let c = Self { m1, m2, alpha };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::domain(format!("alpha must lie in (0, 1/2), got {}", self.alpha)));
        }
        for (name, v) in [("M1", self.m1), ("M2", self.m2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for ThresholdConfig {
    /// Constants suited to features on a unit scale.
    fn default() -> Self {
        Self {
            m1: 2.0,
            m2: 2.0,
            alpha: 0.3,
        }
    }
}
