//! Rule construction (LDA, known-covariance LDA, thresholded SLDA, the
//! population oracle and the pairwise multi-class extension) and prediction.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estimation::{
    centered_rows, class_means, compute_an, compute_tn, default_rtol, invert_sparse_sym, pooled_covariance,
    pseudo_inverse_gram, pseudo_inverse_sym, summarize, threshold_delta, ClassStatistics, ClassSummary,
    InverseOperator, DEFAULT_FLOOR_EPS,
};
use crate::model::{Dataset, LinearRule, MultiRule, PopulationSpec, ThresholdConfig};
use crate::numerics::{cholesky_spd, Matrix, SpdFactor};
use crate::scalar::{dot, format_exact, Real};

/// What thresholding left behind in a fitted SLDA rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityReport {
    pub p: usize,
    pub q_hat: usize,
    pub nnz_offdiag: usize,
    pub frac_delta_kept: f64,
    pub frac_cov_kept: f64,
    pub pd_flag: bool,
    pub floor_count: usize,
    pub degenerate: bool,
    pub t_n: f64,
    pub a_n: f64,
}

impl SparsityReport {
    /// `(key, value)` pairs in a fixed order.
    pub fn to_lines(&self) -> Vec<(&'static str, String)> {
        vec![
            ("p", self.p.to_string()),
            ("q_hat", self.q_hat.to_string()),
            ("nnz_offdiag", self.nnz_offdiag.to_string()),
            ("frac_delta_kept", self.frac_delta_kept.to_string()),
            ("frac_cov_kept", self.frac_cov_kept.to_string()),
            ("pd_flag", self.pd_flag.to_string()),
            ("floor_count", self.floor_count.to_string()),
            ("degenerate", self.degenerate.to_string()),
            ("t_n", format_exact(self.t_n)),
            ("a_n", format_exact(self.a_n)),
        ]
    }

    fn new(p: usize, q_hat: usize, nnz_offdiag: usize, pd_flag: bool, floor_count: usize, t_n: f64, a_n: f64) -> Self {
        let pairs = if p >= 2 { p * (p - 1) } else { 1 };
        Self {
            p,
            q_hat,
            nnz_offdiag,
            frac_delta_kept: q_hat as f64 / p as f64,
            frac_cov_kept: 2.0 * nnz_offdiag as f64 / pairs as f64,
            pd_flag,
            floor_count,
            degenerate: q_hat == 0,
            t_n,
            a_n,
        }
    }
}

/// Anything that maps a feature vector to a class label in `1..=K`.
pub trait Classifier<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn predict(&self, x: &[T]) -> Result<usize>;
}

impl<T: Real> Classifier<T> for LinearRule<T> {
    fn dim(&self) -> usize {
        LinearRule::dim(self)
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn predict(&self, x: &[T]) -> Result<usize> {
        classify(self, x)
    }
}

impl<T: Real> Classifier<T> for MultiRule<T> {
    fn dim(&self) -> usize {
        MultiRule::dim(self)
    }

    fn num_classes(&self) -> usize {
        MultiRule::num_classes(self)
    }

    fn predict(&self, x: &[T]) -> Result<usize> {
        classify_multi(self, x)
    }
}

fn require_two_classes<T: Real>(dataset: &Dataset<T>) -> Result<()> {
    if dataset.num_classes() != 2 {
        return Err(Error::invalid(format!(
            "two-class rule requested for {} classes",
            dataset.num_classes()
        )));
    }
    Ok(())
}

/// Plug-in LDA. Uses `S⁻¹` when `S` has full rank and the Moore–Penrose
/// inverse otherwise (always the case once `p > n - K`).
pub fn build_lda<T: Real>(dataset: &Dataset<T>) -> Result<LinearRule<T>> {
    Ok(fit_lda(dataset)?.0)
}

/// [`build_lda`] together with the inverse that was used.
pub fn fit_lda<T: Real>(dataset: &Dataset<T>) -> Result<(LinearRule<T>, InverseOperator<T>)> {
    require_two_classes(dataset)?;
    let (n, p, k) = (dataset.n(), dataset.p(), dataset.num_classes());
    let means = class_means(dataset);
    let centered = centered_rows(dataset, &means);
    let rtol = default_rtol::<T>(p);
    let inverse = if p > n {
        pseudo_inverse_gram(&centered, rtol)?
    } else {
        let s = pooled_covariance(&centered);
        let factored = if p + k <= n { Some(cholesky_spd(&s)) } else { None };
        match factored {
            Some(Ok(f)) => InverseOperator::from_factor(f),
            Some(Err(Error::NotPositiveDefinite { .. })) | None => pseudo_inverse_sym(&s, rtol)?,
            Some(Err(e)) => return Err(e),
        }
    };
    Ok(lda_from(&means, inverse))
}

fn lda_from<T: Real>(means: &[Vec<T>], inverse: InverseOperator<T>) -> (LinearRule<T>, InverseOperator<T>) {
    let half = T::of(0.5);
    let delta: Vec<T> = means[0].iter().zip(&means[1]).map(|(&a, &b)| a - b).collect();
    let mid: Vec<T> = means[0].iter().zip(&means[1]).map(|(&a, &b)| (a + b) * half).collect();
    let w = inverse.apply(&delta).expect("dimensions agree");
    (LinearRule::through_midpoint(w, &mid), inverse)
}

/// LDA with the true covariance: `w = Σ⁻¹ δ̂`, `c = wᵀ x̄`.
pub fn build_lda_known_sigma<T: Real>(dataset: &Dataset<T>, sigma: &Matrix<T>) -> Result<LinearRule<T>> {
    if sigma.rows() != dataset.p() {
        return Err(Error::Shape {
            expected: dataset.p(),
            got: sigma.rows(),
        });
    }
    build_lda_known_factor(dataset, &cholesky_spd(sigma)?)
}

/// [`build_lda_known_sigma`] from a precomputed factor of `Σ`.
pub fn build_lda_known_factor<T: Real>(dataset: &Dataset<T>, factor: &SpdFactor<T>) -> Result<LinearRule<T>> {
    require_two_classes(dataset)?;
    let means = class_means(dataset);
    let half = T::of(0.5);
    let delta: Vec<T> = means[0].iter().zip(&means[1]).map(|(&a, &b)| a - b).collect();
    let mid: Vec<T> = means[0].iter().zip(&means[1]).map(|(&a, &b)| (a + b) * half).collect();
    Ok(LinearRule::through_midpoint(factor.solve(&delta)?, &mid))
}

/// `Σ̃⁻¹` for one covariance threshold, reusable across mean-difference thresholds.
#[derive(Debug, Clone)]
pub struct ThresholdedInverse<T> {
    pub inverse: InverseOperator<T>,
    pub nnz_offdiag: usize,
    pub t_n: f64,
}

/// Thresholds the pooled covariance of `stats` at `t_n = M1·sqrt(ln p / n)`
/// and inverts the result.
pub fn thresholded_inverse<T: Real, S: ClassStatistics<T> + ?Sized>(
    stats: &S,
    m1: f64,
    floor_eps: f64,
) -> Result<ThresholdedInverse<T>> {
    let t_n = compute_tn(m1, stats.n(), stats.p())?;
    let sigma = stats.thresholded_covariance(T::of(t_n));
    let nnz_offdiag = sigma.nnz_offdiag();
    let inverse = invert_sparse_sym(&sigma, floor_eps)?;
    Ok(ThresholdedInverse {
        inverse,
        nnz_offdiag,
        t_n,
    })
}

/// Thresholded rule for contrast `k` vs `l` given a thresholded inverse.
pub fn slda_contrast<T: Real, S: ClassStatistics<T> + ?Sized>(
    summary: &S,
    inv: &ThresholdedInverse<T>,
    m2: f64,
    alpha: f64,
    k: usize,
    l: usize,
) -> Result<(LinearRule<T>, SparsityReport)> {
    let p = summary.p();
    let a_n = compute_an(m2, summary.n(), p, alpha)?;
    let delta = threshold_delta(&summary.delta_between(k, l), T::of(a_n));
    let w = if delta.q_hat() == 0 {
        vec![T::zero(); p]
    } else {
        inv.inverse.apply(&delta.values)?
    };
    let rule = LinearRule::through_midpoint(w, &summary.mid_between(k, l));
    let report = SparsityReport::new(
        p,
        delta.q_hat(),
        inv.nnz_offdiag,
        inv.inverse.pd_flag(),
        inv.inverse.floor_count(),
        inv.t_n,
        a_n,
    );
    Ok((rule, report))
}

/// SLDA from precomputed class statistics.
pub fn build_slda_from_summary<T: Real>(
    summary: &ClassSummary<T>,
    config: &ThresholdConfig,
) -> Result<(LinearRule<T>, SparsityReport)> {
    config.validate()?;
    let inv = thresholded_inverse(summary, config.m1, DEFAULT_FLOOR_EPS)?;
    slda_contrast(summary, &inv, config.m2, config.alpha, 1, 2)
}

/// Sparse LDA: the LDA rule with `δ̂` and `S` replaced by their thresholded
/// versions `δ̃` and `Σ̃`, centered at `x̄`.
pub fn build_slda<T: Real>(dataset: &Dataset<T>, config: &ThresholdConfig) -> Result<(LinearRule<T>, SparsityReport)> {
    require_two_classes(dataset)?;
    build_slda_from_summary(&summarize(dataset), config)
}

/// Optimal rule for a two-class population: `w = Σ⁻¹ δ`, `c = wᵀ μ̄`.
pub fn build_oracle<T: Real>(pop: &PopulationSpec<T>) -> Result<LinearRule<T>> {
    if pop.num_classes() != 2 {
        return Err(Error::invalid("two-class oracle requested for a multi-class population"));
    }
    let w = pop.factor().solve(&pop.delta())?;
    Ok(LinearRule::through_midpoint(w, &pop.midpoint()))
}

/// Pairwise oracle rules `Σ⁻¹(μ_k - μ_l)` for any number of classes.
pub fn build_oracle_multi<T: Real>(pop: &PopulationSpec<T>) -> Result<MultiRule<T>> {
    let kk = pop.num_classes();
    let half = T::of(0.5);
    let mut pairwise = BTreeMap::new();
    for k in 1..=kk {
        for l in (k + 1)..=kk {
            let (a, b) = (pop.mean(k), pop.mean(l));
            let delta: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
            let mid: Vec<T> = a.iter().zip(b).map(|(&x, &y)| (x + y) * half).collect();
            pairwise.insert((k, l), LinearRule::through_midpoint(pop.factor().solve(&delta)?, &mid));
        }
    }
    MultiRule::new(kk, pairwise)
}

/// Class 1 iff `wᵀx ≥ c`, else class 2.
pub fn classify<T: Real>(rule: &LinearRule<T>, x: &[T]) -> Result<usize> {
    Ok(if rule.score(x)? >= T::zero() { 1 } else { 2 })
}

/// Multi-class SLDA: one `Σ̃` thresholded from the `K`-class pooled
/// covariance, every `δ̃_kl` thresholded at the same `a_n`.
pub fn build_slda_multi<T: Real>(dataset: &Dataset<T>, config: &ThresholdConfig) -> Result<MultiRule<T>> {
    config.validate()?;
    let summary = summarize(dataset);
    let inv = thresholded_inverse(&summary, config.m1, DEFAULT_FLOOR_EPS)?;
    let kk = dataset.num_classes();
    let mut pairwise = BTreeMap::new();
    for k in 1..=kk {
        for l in (k + 1)..=kk {
            let (rule, _) = slda_contrast(&summary, &inv, config.m2, config.alpha, k, l)?;
            pairwise.insert((k, l), rule);
        }
    }
    MultiRule::new(kk, pairwise)
}

/// Returns the class whose smallest pairwise score is largest. When some
/// class beats every other (all its scores `≥ 0`) that class is the answer,
/// since any other class then has a score `≤ 0` against it. Ties go to the
/// lowest class index.
pub fn classify_multi<T: Real>(rule: &MultiRule<T>, x: &[T]) -> Result<usize> {
    let kk = rule.num_classes();
    if x.len() != rule.dim() {
        return Err(Error::Shape {
            expected: rule.dim(),
            got: x.len(),
        });
    }
    // scores[k][l] for k < l; the reverse is the negation
    let mut scores = vec![vec![T::zero(); kk + 1]; kk + 1];
    for (&(k, l), r) in rule.pairwise() {
        let s = dot(r.weights(), x) - r.cutoff();
        scores[k][l] = s;
        scores[l][k] = -s;
    }
    let mut best = 1;
    let mut best_min = T::neg_infinity();
    for k in 1..=kk {
        let m = (1..=kk)
            .filter(|&l| l != k)
            .map(|l| scores[k][l])
            .fold(T::infinity(), T::min);
        if m > best_min {
            best_min = m;
            best = k;
        }
    }
    Ok(best)
}
