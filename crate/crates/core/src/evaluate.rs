//! Misclassification rates: closed form against normal populations, Monte
//! Carlo for t and multi-class populations, empirical test rates, and
//! leave-one-out cross-validation over `(M1, M2)`.
//!
//! Parallel work is split into fixed, index-addressed pieces and combined
//! in index order or with integer counts, so results do not depend on the
//! number of threads.

use rayon::prelude::*;

use crate::classify::{
    build_slda_multi, classify_multi, slda_contrast, thresholded_inverse, Classifier,
};
use crate::error::{Error, Result};
use crate::estimation::{
    compute_an, compute_tn, summarize, ClassStatistics, ClassSummary, LeaveOneOut, DEFAULT_FLOOR_EPS,
};
use crate::model::{Dataset, Distribution, LinearRule, MultiRule, PopulationSpec, ThresholdConfig};
use crate::numerics::{sample_mvn, sample_mvt, std_normal_cdf, Matrix, RngStream};
use crate::scalar::{dot, Real};

/// Draws per Monte-Carlo work unit; each unit owns a derived RNG stream.
const MC_CHUNK: usize = 4096;

/// Number of points per axis in the default CV grid.
pub const DEFAULT_GRID_POINTS: usize = 7;

/// Quantile range of the default CV grid.
const GRID_QUANTILES: (f64, f64) = (0.5, 0.999);

/// Cap on covariance entries inspected when building the default `M1` grid.
const GRID_SAMPLE_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateMethod {
    ClosedForm,
    MonteCarlo { n_mc: usize, stderr: f64 },
    Empirical { n_test: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Equal-weight mean of `per_class_error`.
    pub conditional_rate: f64,
    pub per_class_error: Vec<f64>,
    pub method: RateMethod,
    /// Set when the rule had `w = 0`.
    pub degenerate: bool,
}

impl RateReport {
    fn new(per_class_error: Vec<f64>, method: RateMethod, degenerate: bool) -> Self {
        let conditional_rate = per_class_error.iter().sum::<f64>() / per_class_error.len() as f64;
        Self {
            conditional_rate,
            per_class_error,
            method,
            degenerate,
        }
    }

    pub fn stderr(&self) -> Option<f64> {
        match self.method {
            RateMethod::MonteCarlo { stderr, .. } => Some(stderr),
            _ => None,
        }
    }
}

/// `Δ_p = sqrt(δᵀ Σ⁻¹ δ)` for a two-class population.
pub fn mahalanobis<T: Real>(pop: &PopulationSpec<T>) -> Result<f64> {
    if pop.num_classes() != 2 {
        return Err(Error::Unsupported("Mahalanobis distance needs exactly two classes".into()));
    }
    let delta = pop.delta();
    let x = pop.factor().solve(&delta)?;
    Ok(dot(&delta, &x).as_f64().max(0.0).sqrt())
}

fn require_normal_two_class<T: Real>(pop: &PopulationSpec<T>) -> Result<()> {
    if !pop.is_normal() {
        return Err(Error::Unsupported(
            "closed-form rates need a normal population; use Monte Carlo".into(),
        ));
    }
    if pop.num_classes() != 2 {
        return Err(Error::Unsupported(
            "closed-form rates need two classes; use Monte Carlo".into(),
        ));
    }
    Ok(())
}

/// Rate of the Bayes rule, `Φ(-Δ_p/2)`, for a two-class normal population.
pub fn optimal_rate<T: Real>(pop: &PopulationSpec<T>) -> Result<RateReport> {
    require_normal_two_class(pop)?;
    let r = std_normal_cdf(-mahalanobis(pop)? / 2.0)?;
    Ok(RateReport::new(vec![r, r], RateMethod::ClosedForm, false))
}

/// Conditional rate of a fixed linear rule against a two-class normal
/// population: class 1 error `Φ((c - wᵀμ_1)/σ_w)`, class 2 error
/// `Φ((wᵀμ_2 - c)/σ_w)`, `σ_w² = wᵀΣw`.
pub fn conditional_rate<T: Real>(rule: &LinearRule<T>, pop: &PopulationSpec<T>) -> Result<RateReport> {
    require_normal_two_class(pop)?;
    if rule.dim() != pop.p() {
        return Err(Error::Shape {
            expected: pop.p(),
            got: rule.dim(),
        });
    }
    if rule.is_degenerate() {
        return Ok(RateReport::new(vec![0.0, 1.0], RateMethod::ClosedForm, true));
    }
    let (w, c) = (rule.weights(), rule.cutoff());
    let lw = pop.factor().mul_lower_transpose(w)?;
    let sigma_w = dot(&lw, &lw).as_f64().sqrt();
    let e1 = std_normal_cdf((c - dot(w, pop.mean(1))).as_f64() / sigma_w)?;
    let e2 = std_normal_cdf((dot(w, pop.mean(2)) - c).as_f64() / sigma_w)?;
    Ok(RateReport::new(vec![e1, e2], RateMethod::ClosedForm, false))
}

fn mc_report(errors: Vec<usize>, n_mc: usize, degenerate: bool) -> RateReport {
    let k = errors.len() as f64;
    let per_class: Vec<f64> = errors.iter().map(|&e| e as f64 / n_mc as f64).collect();
    let var: f64 = per_class.iter().map(|&e| e * (1.0 - e) / n_mc as f64).sum();
    RateReport::new(
        per_class,
        RateMethod::MonteCarlo {
            n_mc,
            stderr: var.sqrt() / k,
        },
        degenerate,
    )
}

/// Counts, per class, how many of `n_mc` draws `wrong(k, stream)` flags.
/// Chunk `j` of class `k` uses `stream.derive(k - 1).derive(j)`.
fn mc_error_counts(
    num_classes: usize,
    n_mc: usize,
    stream: &RngStream,
    wrong: impl Fn(usize, &mut RngStream) -> Result<bool> + Sync,
) -> Result<Vec<usize>> {
    if n_mc == 0 {
        return Err(Error::domain("n_mc must be at least 1"));
    }
    let chunks = n_mc.div_ceil(MC_CHUNK);
    (1..=num_classes)
        .map(|k| {
            let class_stream = stream.derive((k - 1) as u64);
            let counts = (0..chunks)
                .into_par_iter()
                .map(|j| {
                    let mut s = class_stream.derive(j as u64);
                    let draws = MC_CHUNK.min(n_mc - j * MC_CHUNK);
                    let mut e = 0usize;
                    for _ in 0..draws {
                        e += wrong(k, &mut s)? as usize;
                    }
                    Ok(e)
                })
                .collect::<Result<Vec<usize>>>()?;
            Ok(counts.into_iter().sum())
        })
        .collect()
}

fn draw<T: Real>(pop: &PopulationSpec<T>, k: usize, stream: &mut RngStream) -> Result<Vec<T>> {
    match pop.distribution() {
        Distribution::Normal => sample_mvn(pop.mean(k), pop.factor(), stream),
        Distribution::StudentT { df } => sample_mvt(pop.mean(k), pop.factor(), df, stream),
    }
}

/// Monte-Carlo conditional rate: `n_mc` full draws per class from `pop`,
/// classified by `rule`, per-class errors averaged with equal weights.
pub fn conditional_rate_mc<T: Real, C: Classifier<T> + ?Sized>(
    rule: &C,
    pop: &PopulationSpec<T>,
    n_mc: usize,
    stream: &RngStream,
) -> Result<RateReport> {
    if rule.dim() != pop.p() {
        return Err(Error::Shape {
            expected: pop.p(),
            got: rule.dim(),
        });
    }
    if rule.num_classes() != pop.num_classes() {
        return Err(Error::invalid(format!(
            "rule has {} classes, population has {}",
            rule.num_classes(),
            pop.num_classes()
        )));
    }
    let errors = mc_error_counts(pop.num_classes(), n_mc, stream, |k, s| {
        let x = draw(pop, k, s)?;
        Ok(rule.predict(&x)? != k)
    })?;
    Ok(mc_report(errors, n_mc, false))
}

/// Monte-Carlo conditional rate of a linear rule from its one-dimensional
/// projection. For an elliptical population `wᵀx - c` equals
/// `(wᵀμ_k - c) + σ_w·z·sqrt(df/χ²_df)` in law (without the χ² factor for
/// a normal population), so one scalar draw replaces a `p`-vector draw.
pub fn conditional_rate_mc_projected<T: Real>(
    rule: &LinearRule<T>,
    pop: &PopulationSpec<T>,
    n_mc: usize,
    stream: &RngStream,
) -> Result<RateReport> {
    if pop.num_classes() != 2 {
        return Err(Error::Unsupported("projected Monte Carlo needs two classes".into()));
    }
    if rule.dim() != pop.p() {
        return Err(Error::Shape {
            expected: pop.p(),
            got: rule.dim(),
        });
    }
    if rule.is_degenerate() {
        // every draw lands on the cutoff and is assigned to class 1
        return Ok(mc_report(vec![0, n_mc], n_mc, true));
    }
    let w = rule.weights();
    let lw = pop.factor().mul_lower_transpose(w)?;
    let sigma_w = dot(&lw, &lw).as_f64().sqrt();
    let offsets = [
        (dot(w, pop.mean(1)) - rule.cutoff()).as_f64(),
        (dot(w, pop.mean(2)) - rule.cutoff()).as_f64(),
    ];
    let df = match pop.distribution() {
        Distribution::Normal => None,
        Distribution::StudentT { df } => Some(df as f64),
    };
    let errors = mc_error_counts(2, n_mc, stream, |k, s| {
        let mut z = s.standard_normal();
        if let Some(df) = df {
            z *= (df / s.chi_square(df)).sqrt();
        }
        let score = offsets[k - 1] + sigma_w * z;
        Ok(if k == 1 { score < 0.0 } else { score >= 0.0 })
    })?;
    Ok(mc_report(errors, n_mc, false))
}

/// Per-class misclassified fraction on labeled data, averaged equally.
pub fn empirical_rate_labeled<T: Real, C: Classifier<T> + ?Sized>(
    rule: &C,
    features: &Matrix<T>,
    labels: &[usize],
) -> Result<RateReport> {
    if features.rows() != labels.len() {
        return Err(Error::Shape {
            expected: features.rows(),
            got: labels.len(),
        });
    }
    if features.cols() != rule.dim() {
        return Err(Error::Shape {
            expected: rule.dim(),
            got: features.cols(),
        });
    }
    let kk = rule.num_classes();
    let mut totals = vec![0usize; kk];
    let mut wrong = vec![0usize; kk];
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 || l > kk {
            return Err(Error::invalid(format!("label {l} outside 1..={kk}")));
        }
        totals[l - 1] += 1;
        if rule.predict(features.row(i))? != l {
            wrong[l - 1] += 1;
        }
    }
    if let Some(k) = totals.iter().position(|&t| t == 0) {
        return Err(Error::invalid(format!("class {} has no test samples", k + 1)));
    }
    let per_class = wrong.iter().zip(&totals).map(|(&w, &t)| w as f64 / t as f64).collect();
    Ok(RateReport::new(
        per_class,
        RateMethod::Empirical { n_test: labels.len() },
        false,
    ))
}

pub fn empirical_rate<T: Real, C: Classifier<T> + ?Sized>(rule: &C, test: &Dataset<T>) -> Result<RateReport> {
    empirical_rate_labeled(rule, test.features(), test.labels())
}

/// Scores of a grid scan: one LOOCV rate per `(M1, M2)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSurface {
    pub grid: Vec<(f64, f64)>,
    pub scores: Vec<f64>,
    /// True where some fold failed; those points score 1.0.
    pub failed: Vec<bool>,
    pub best: (f64, f64),
    pub best_score: f64,
    pub alpha: f64,
}

fn check_loocv_counts<T: Real>(dataset: &Dataset<T>) -> Result<()> {
    if let Some(k) = dataset.class_counts().iter().position(|&c| c < 3) {
        return Err(Error::invalid(format!(
            "leave-one-out needs at least 3 samples per class; class {} has {}",
            k + 1,
            dataset.class_counts()[k]
        )));
    }
    Ok(())
}

/// Pairwise SLDA rules on precomputed statistics, sharing one `Σ̃⁻¹`.
fn pairwise_rules<T: Real, S: ClassStatistics<T>>(
    stats: &S,
    inv: &crate::classify::ThresholdedInverse<T>,
    m2: f64,
    alpha: f64,
) -> Result<MultiRule<T>> {
    let kk = stats.num_classes();
    let mut pairwise = std::collections::BTreeMap::new();
    for k in 1..=kk {
        for l in (k + 1)..=kk {
            pairwise.insert((k, l), slda_contrast(stats, inv, m2, alpha, k, l)?.0);
        }
    }
    MultiRule::new(kk, pairwise)
}

/// For each fold (sample), the fitted rules at every `(M1, M2)` grid point,
/// `M1`-major; `visit(fold, grid_index, rule)` maps each to a value.
fn scan_folds<T: Real, R: Send>(
    dataset: &Dataset<T>,
    m1_grid: &[f64],
    m2_grid: &[f64],
    alpha: f64,
    visit: impl Fn(usize, MultiRule<T>) -> R + Sync,
) -> Result<Vec<Vec<Result<R>>>> {
    check_loocv_counts(dataset)?;
    let full = summarize(dataset);
    let points = m1_grid.len() * m2_grid.len();
    Ok((0..dataset.n())
        .into_par_iter()
        .map(|i| {
            let loo = match LeaveOneOut::new(&full, dataset.row(i), dataset.labels()[i]) {
                Ok(l) => l,
                Err(e) => return (0..points).map(|_| Err(e.duplicate())).collect(),
            };
            let mut out = Vec::with_capacity(points);
            for &m1 in m1_grid {
                match thresholded_inverse(&loo, m1, DEFAULT_FLOOR_EPS) {
                    Ok(inv) => {
                        for &m2 in m2_grid {
                            out.push(pairwise_rules(&loo, &inv, m2, alpha).map(|r| visit(i, r)));
                        }
                    }
                    Err(e) => out.extend(m2_grid.iter().map(|_| Err(e.duplicate()))),
                }
            }
            out
        })
        .collect())
}

/// Leave-one-out rules for every fold via rank-one downdates of the
/// full-data statistics.
pub fn loocv_rules<T: Real>(dataset: &Dataset<T>, config: &ThresholdConfig) -> Result<Vec<MultiRule<T>>> {
    config.validate()?;
    let folds = scan_folds(dataset, &[config.m1], &[config.m2], config.alpha, |_, r| r)?;
    folds
        .into_iter()
        .enumerate()
        .map(|(i, mut f)| f.pop().expect("one grid point").map_err(|e| fold_error(i, e)))
        .collect()
}

/// Same as [`loocv_rules`] by refitting from scratch on each reduced dataset.
pub fn loocv_rules_naive<T: Real>(dataset: &Dataset<T>, config: &ThresholdConfig) -> Result<Vec<MultiRule<T>>> {
    config.validate()?;
    check_loocv_counts(dataset)?;
    (0..dataset.n())
        .into_par_iter()
        .map(|i| {
            dataset
                .without_sample(i)
                .and_then(|d| build_slda_multi(&d, config))
                .map_err(|e| fold_error(i, e))
        })
        .collect()
}

fn fold_error(i: usize, e: Error) -> Error {
    Error::Fold {
        fold: i + 1,
        source: Box::new(e),
    }
}

/// `R̂ = (1/n) Σ 1{held-out sample misclassified}` with each fold refit on
/// `n - 1` samples (thresholds recomputed with `n - 1`).
pub fn loocv_rate<T: Real>(dataset: &Dataset<T>, config: &ThresholdConfig) -> Result<f64> {
    config.validate()?;
    let folds = scan_folds(dataset, &[config.m1], &[config.m2], config.alpha, |i, r| {
        classify_multi(&r, dataset.row(i)).map(|k| k != dataset.labels()[i])
    })?;
    let mut wrong = 0usize;
    for (i, mut f) in folds.into_iter().enumerate() {
        wrong += f.pop().expect("one grid point").and_then(|r| r).map_err(|e| fold_error(i, e))? as usize;
    }
    Ok(wrong as f64 / dataset.n() as f64)
}

/// Naive leave-one-out rate for any fitting procedure.
pub fn loocv_rate_with<T: Real, C: Classifier<T>>(
    dataset: &Dataset<T>,
    fit: impl Fn(&Dataset<T>) -> Result<C> + Sync,
) -> Result<f64> {
    check_loocv_counts(dataset)?;
    let wrong = (0..dataset.n())
        .into_par_iter()
        .map(|i| {
            let train = dataset.without_sample(i)?;
            let rule = fit(&train)?;
            Ok((rule.predict(dataset.row(i))? != dataset.labels()[i]) as usize)
        })
        .collect::<Vec<Result<usize>>>()
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| fold_error(i, e)))
        .sum::<Result<usize>>()?;
    Ok(wrong as f64 / dataset.n() as f64)
}

/// LOOCV at every `(M1, M2)` in `m1_grid × m2_grid`. The best point has the
/// lowest score; ties go to the largest `M2`, then the largest `M1`.
pub fn cv_grid_search<T: Real>(dataset: &Dataset<T>, m1_grid: &[f64], m2_grid: &[f64], alpha: f64) -> Result<CvSurface> {
    if m1_grid.is_empty() || m2_grid.is_empty() {
        return Err(Error::invalid("CV grids must be non-empty"));
    }
    for &m1 in m1_grid {
        for &m2 in m2_grid {
            ThresholdConfig::new(m1, m2, alpha)?;
        }
    }
    let folds = scan_folds(dataset, m1_grid, m2_grid, alpha, |i, r| {
        classify_multi(&r, dataset.row(i)).map(|k| k != dataset.labels()[i])
    })?;
    let points = m1_grid.len() * m2_grid.len();
    let mut wrong = vec![0usize; points];
    let mut failed = vec![false; points];
    for fold in folds {
        for (g, r) in fold.into_iter().enumerate() {
            match r.and_then(|x| x) {
                Ok(miss) => wrong[g] += miss as usize,
                Err(_) => failed[g] = true,
            }
        }
    }
    let n = dataset.n() as f64;
    let grid: Vec<(f64, f64)> = m1_grid
        .iter()
        .flat_map(|&m1| m2_grid.iter().map(move |&m2| (m1, m2)))
        .collect();
    let scores: Vec<f64> = wrong
        .iter()
        .zip(&failed)
        .map(|(&w, &f)| if f { 1.0 } else { w as f64 / n })
        .collect();
    let mut best = 0;
    for g in 1..points {
        let (s, b) = (scores[g], scores[best]);
        let (m1, m2) = grid[g];
        let (bm1, bm2) = grid[best];
        if s < b || (s == b && (m2 > bm2 || (m2 == bm2 && m1 > bm1))) {
            best = g;
        }
    }
    Ok(CvSurface {
        best: grid[best],
        best_score: scores[best],
        grid,
        scores,
        failed,
        alpha,
    })
}

/// Nearest-rank quantile of `values` (sorted in place).
fn quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    let idx = ((q * m as f64).ceil() as usize).clamp(1, m) - 1;
    values[idx]
}

/// `k` log-spaced values from `lo` to `hi`. A zero lower end is replaced by
/// `hi/1000`; an all-zero range collapses to `[0]`.
pub fn log_spaced(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if !(hi > 0.0) || k == 0 {
        return vec![0.0];
    }
    let lo = if lo > 0.0 { lo.min(hi) } else { hi * 1e-3 };
    if k == 1 || lo == hi {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k)
        .map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp())
        .collect()
}

/// Data-driven default grids: `M2` values put `a_n` on log-spaced points
/// between the 50th and 99.9th percentiles of `|δ̂_j|` (all pairwise
/// contrasts pooled), `M1` values do the same for `t_n` and the off-diagonal
/// `|S_jl|`.
pub fn default_grids<T: Real>(dataset: &Dataset<T>, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    default_grids_from(&summarize(dataset), alpha)
}

pub fn default_grids_from<T: Real>(summary: &ClassSummary<T>, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n, p) = (summary.n(), summary.p());
    let tn_scale = compute_tn(1.0, n, p)?;
    let an_scale = compute_an(1.0, n, p, alpha)?;
    let kk = summary.class_counts.len();
    let mut deltas: Vec<f64> = Vec::new();
    for k in 1..=kk {
        for l in (k + 1)..=kk {
            deltas.extend(summary.delta_between(k, l).iter().map(|d| d.abs().as_f64()));
        }
    }
    let mut offs: Vec<f64> = summary
        .offdiag_magnitudes(GRID_SAMPLE_LIMIT)
        .iter()
        .map(|v| v.as_f64())
        .collect();
    let (qlo, qhi) = GRID_QUANTILES;
    let m2 = log_spaced(
        quantile(&mut deltas, qlo) / an_scale,
        quantile(&mut deltas, qhi) / an_scale,
        DEFAULT_GRID_POINTS,
    );
    let m1 = if offs.is_empty() {
        vec![0.0]
    } else {
        log_spaced(
            quantile(&mut offs, qlo) / tn_scale,
            quantile(&mut offs, qhi) / tn_scale,
            DEFAULT_GRID_POINTS,
        )
    };
    Ok((m1, m2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{build_oracle, build_slda};
    use crate::model::validate_dataset;
    use crate::numerics::SparseSymMatrix;

    const PHI_M1: f64 = 0.15865525393145705;

    fn unit_pop() -> PopulationSpec<f64> {
        PopulationSpec::new(
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            SparseSymMatrix::identity(2),
            Distribution::Normal,
        )
        .unwrap()
    }

    #[test]
    fn optimal_rate_examples() {
        let r = optimal_rate(&unit_pop()).unwrap();
        assert!((r.conditional_rate - PHI_M1).abs() < 1e-15);
        assert_eq!(r.per_class_error[0], r.per_class_error[1]);

        let tiny = PopulationSpec::two_class(vec![1e-9, 0.0], SparseSymMatrix::identity(2), Distribution::Normal)
            .unwrap();
        assert!((optimal_rate(&tiny).unwrap().conditional_rate - 0.5).abs() < 1e-9);

        let t = unit_pop().with_distribution(Distribution::StudentT { df: 3 }).unwrap();
        assert!(matches!(optimal_rate(&t), Err(Error::Unsupported(_))));
    }

    #[test]
    fn conditional_rate_hand_example() {
        let r = conditional_rate(&LinearRule::new(vec![1.0, 0.0], 0.5), &unit_pop()).unwrap();
        assert!((r.conditional_rate - 0.18767236999742248).abs() < 1e-14);
        assert_eq!(r.method, RateMethod::ClosedForm);
    }

    #[test]
    fn oracle_attains_optimal_rate() {
        let pop = unit_pop();
        let a = conditional_rate(&build_oracle(&pop).unwrap(), &pop).unwrap();
        let b = optimal_rate(&pop).unwrap();
        assert!((a.conditional_rate - b.conditional_rate).abs() < 1e-12);
    }

    #[test]
    fn degenerate_rule_rates() {
        let r = LinearRule::new(vec![0.0, 0.0], 0.0);
        let c = conditional_rate(&r, &unit_pop()).unwrap();
        assert_eq!((c.conditional_rate, c.per_class_error.clone(), c.degenerate), (0.5, vec![0.0, 1.0], true));
        let mc = conditional_rate_mc(&r, &unit_pop(), 1000, &RngStream::new(1)).unwrap();
        assert_eq!(mc.per_class_error, vec![0.0, 1.0]);
        assert_eq!(mc.conditional_rate, 0.5);
        let pr = conditional_rate_mc_projected(&r, &unit_pop(), 1000, &RngStream::new(1)).unwrap();
        assert_eq!(pr.per_class_error, vec![0.0, 1.0]);
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let rule = LinearRule::new(vec![1.0, 0.3], 0.2);
        let pop = unit_pop();
        let exact = conditional_rate(&rule, &pop).unwrap().conditional_rate;
        let mc = conditional_rate_mc(&rule, &pop, 100_000, &RngStream::new(11)).unwrap();
        let se = mc.stderr().unwrap();
        assert!((mc.conditional_rate - exact).abs() <= 3.0 * se, "{} vs {exact} ± {se}", mc.conditional_rate);
        let pr = conditional_rate_mc_projected(&rule, &pop, 100_000, &RngStream::new(12)).unwrap();
        assert!((pr.conditional_rate - exact).abs() <= 3.0 * pr.stderr().unwrap());
        let again = conditional_rate_mc(&rule, &pop, 100_000, &RngStream::new(11)).unwrap();
        assert_eq!(mc, again);
    }

    #[test]
    fn projected_t_matches_full_draws() {
        let rule = LinearRule::new(vec![1.0, -0.5], 0.1);
        let pop = unit_pop().with_distribution(Distribution::StudentT { df: 3 }).unwrap();
        let full = conditional_rate_mc(&rule, &pop, 100_000, &RngStream::new(3)).unwrap();
        let proj = conditional_rate_mc_projected(&rule, &pop, 100_000, &RngStream::new(4)).unwrap();
        let se = (full.stderr().unwrap().powi(2) + proj.stderr().unwrap().powi(2)).sqrt();
        assert!((full.conditional_rate - proj.conditional_rate).abs() <= 3.5 * se);
    }

    #[test]
    fn empirical_rate_examples() {
        let rule = LinearRule::new(vec![1.0], 0.0);
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [-1.0], [-1.0], [-2.0], [-3.0], [-4.0]]).unwrap();
        let r = empirical_rate_labeled(&rule, &x, &[1, 1, 1, 1, 2, 2, 2, 2]).unwrap();
        assert_eq!(r.conditional_rate, 0.125);
        assert_eq!(r.per_class_error, vec![0.25, 0.0]);
        let r = empirical_rate_labeled(&rule, &x, &[1, 1, 1, 2, 2, 2, 2, 2]).unwrap();
        assert_eq!(r.conditional_rate, 0.0);
        let r = empirical_rate_labeled(&rule, &x, &[2, 2, 2, 1, 1, 1, 1, 1]).unwrap();
        assert_eq!(r.conditional_rate, 1.0);
        assert!(empirical_rate_labeled(&rule, &x, &[1; 8]).is_err());
    }

    fn separated(n_per: usize, p: usize) -> Dataset<f64> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for k in 0..2 {
            for i in 0..n_per {
                let mut r: Vec<f64> = (0..p).map(|j| ((i * 31 + j * 17 + k * 5) % 7) as f64 * 0.01).collect();
                r[0] += if k == 0 { 10.0 } else { -10.0 };
                rows.push(r);
                labels.push(k as i64 + 1);
            }
        }
        validate_dataset(&rows, &labels).unwrap()
    }

    #[test]
    fn loocv_separable_and_degenerate() {
        let d = separated(6, 4);
        assert_eq!(loocv_rate(&d, &ThresholdConfig::new(0.5, 0.5, 0.3).unwrap()).unwrap(), 0.0);
        let r = loocv_rate(&d, &ThresholdConfig::new(0.5, 1e12, 0.3).unwrap()).unwrap();
        assert_eq!(r, 6.0 / 12.0);
        let small = validate_dataset(&[[0.0], [1.0], [5.0], [6.0], [7.0]], &[1, 1, 2, 2, 2]).unwrap();
        assert!(loocv_rate(&small, &ThresholdConfig::default()).is_err());
    }

    #[test]
    fn downdated_folds_match_naive_refits() {
        let rows: Vec<Vec<f64>> = (0..14)
            .map(|i| (0..6).map(|j| ((i * 5 + j * 11) as f64 * 0.37).sin() + if i < 7 && j < 2 { 1.0 } else { 0.0 }).collect())
            .collect();
        let labels: Vec<i64> = (0..14).map(|i| if i < 7 { 1 } else { 2 }).collect();
        let d = validate_dataset(&rows, &labels).unwrap();
        let cfg = ThresholdConfig::new(0.3, 0.2, 0.3).unwrap();
        let fast = loocv_rules(&d, &cfg).unwrap();
        let slow = loocv_rules_naive(&d, &cfg).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            let (a, b) = (a.pair(1, 2), b.pair(1, 2));
            let scale = 1.0 + b.weights().iter().fold(0.0f64, |m, w| m.max(w.abs()));
            for (x, y) in a.weights().iter().zip(b.weights()) {
                assert!((x - y).abs() <= 1e-10 * scale);
            }
            assert!((a.cutoff() - b.cutoff()).abs() <= 1e-10 * scale);
        }
        // two-class multi rule equals the plain SLDA rule on the reduced data
        let (plain, _) = build_slda(&d.without_sample(3).unwrap(), &cfg).unwrap();
        assert_eq!(slow[3].pair(1, 2), plain);
    }

    #[test]
    fn grid_search_tie_rule_and_duplicates() {
        let d = separated(5, 3);
        let s = cv_grid_search(&d, &[0.1], &[0.2], 0.3).unwrap();
        assert_eq!(s.best, (0.1, 0.2));
        assert_eq!(s.scores.len(), 1);

        let s = cv_grid_search(&d, &[0.1, 0.5], &[0.2, 0.4], 0.3).unwrap();
        assert_eq!(s.best_score, 0.0);
        assert_eq!(s.best, (0.5, 0.4));
        let dup = cv_grid_search(&d, &[0.1, 0.5, 0.5], &[0.4, 0.2, 0.4], 0.3).unwrap();
        assert_eq!(dup.best, s.best);

        let s = cv_grid_search(&d, &[0.0, 0.1], &[0.0, 1e12], 0.3).unwrap();
        assert_eq!(s.best_score, 0.0);
        assert_eq!(s.best.1, 0.0);
        assert!(cv_grid_search(&d, &[], &[1.0], 0.3).is_err());
    }

    #[test]
    fn default_grid_shapes() {
        let d = separated(5, 6);
        let (m1, m2) = default_grids(&d, 0.3).unwrap();
        assert_eq!(m2.len(), DEFAULT_GRID_POINTS);
        assert!(m2.windows(2).all(|w| w[0] < w[1]));
        assert!(!m1.is_empty());
        assert_eq!(log_spaced(0.0, 0.0, 7), vec![0.0]);
        let g = log_spaced(1.0, 100.0, 3);
        assert!((g[1] - 10.0).abs() < 1e-12);
        let mut v = vec![3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile(&mut v, 0.5), 2.0);
        assert_eq!(quantile(&mut v, 0.999), 4.0);
    }
}
