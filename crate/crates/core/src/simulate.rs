//! Scenario harness: population recipes, a replicate runner that records
//! conditional rates of each fitted rule against the true population, the
//! preset catalog, and CSV / summary writers.
//!
//! Replicate `k` draws from `RngStream::substream(seed, k)`: child stream 0
//! generates the training sample, child `1 + m` the Monte-Carlo draws of
//! method `m`. Records are therefore fixed by `(scenario, k)` alone.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{build_lda_known_factor, build_oracle, build_slda, fit_lda, SparsityReport};
use crate::diagnostics::sparse_eigenvalues;
use crate::error::{Error, Result};
use crate::evaluate::{conditional_rate, conditional_rate_mc_projected, cv_grid_search, default_grids, optimal_rate, RateReport};
use crate::io::read_covariance;
use crate::model::{Dataset, Distribution, LinearRule, PopulationSpec, ThresholdConfig};
use crate::numerics::{sample_mvn, sample_mvt, Matrix, RngStream, SparseSymMatrix};
use crate::scalar::format_exact;

/// Monte-Carlo draws per class for t populations.
pub const DEFAULT_N_MC: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum DeltaPattern {
    /// `count` entries of `magnitude` at indices `0, spacing, 2·spacing, …`.
    Sparse { count: usize, magnitude: f64, spacing: usize },
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaPattern {
    Identity,
    /// `σ_jl = ρ^{|j-l|}`.
    Ar1 { rho: f64 },
    /// Unit diagonal, `value` on the `width` nearest off-diagonals.
    Banded { width: usize, value: f64 },
    FromFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationRecipe {
    pub p: usize,
    pub delta: DeltaPattern,
    pub sigma: SigmaPattern,
    /// For t populations the recipe's `Σ` is the scale matrix, so the
    /// covariance is `df/(df-2)·Σ`.
    pub distribution: Distribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Slda,
    Lda,
    LdaKnownSigma,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Slda, Method::Lda, Method::LdaKnownSigma, Method::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Method::Slda => "slda",
            Method::Lda => "lda",
            Method::LdaKnownSigma => "lda_known_sigma",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }

    fn index(self) -> u64 {
        self as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tuning {
    Fixed(ThresholdConfig),
    /// LOOCV grid search; `None` grids fall back to the data-driven defaults.
    Cv {
        m1_grid: Option<Vec<f64>>,
        m2_grid: Option<Vec<f64>>,
        alpha: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub recipe: PopulationRecipe,
    pub n1: usize,
    pub n2: usize,
    pub methods: Vec<Method>,
    pub tuning: Tuning,
    pub reps: usize,
    pub seed: u64,
    pub n_mc: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        let min_n = if matches!(self.tuning, Tuning::Cv { .. }) { 3 } else { 2 };
        if self.n1 < min_n || self.n2 < min_n {
            return Err(Error::invalid(format!("class sizes must be at least {min_n}")));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods requested"));
        }
        if self.n_mc == 0 {
            return Err(Error::invalid("n_mc must be at least 1"));
        }
        match &self.tuning {
            Tuning::Fixed(c) => c.validate()?,
            Tuning::Cv { m1_grid, m2_grid, alpha } => {
                ThresholdConfig::new(0.0, 0.0, *alpha)?;
                for g in [m1_grid, m2_grid].into_iter().flatten() {
                    if g.is_empty() || g.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                        return Err(Error::invalid("CV grids must be non-empty and nonnegative"));
                    }
                }
            }
        }
        validate_recipe(&self.recipe)
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }
}

fn validate_recipe(r: &PopulationRecipe) -> Result<()> {
    if r.p < 2 {
        return Err(Error::invalid("p must be at least 2"));
    }
    match &r.delta {
        DeltaPattern::Sparse { count, magnitude, spacing } => {
            if *count == 0 || *spacing == 0 || (count - 1) * spacing >= r.p {
                return Err(Error::invalid(format!(
                    "{count} signals with spacing {spacing} do not fit in p = {}",
                    r.p
                )));
            }
            if !(magnitude.is_finite() && *magnitude != 0.0) {
                return Err(Error::invalid("signal magnitude must be finite and nonzero"));
            }
        }
        DeltaPattern::Explicit(v) => {
            if v.len() != r.p {
                return Err(Error::Shape {
                    expected: r.p,
                    got: v.len(),
                });
            }
        }
    }
    if let SigmaPattern::Ar1 { rho } = r.sigma {
        if !(rho.abs() < 1.0) {
            return Err(Error::invalid(format!("ar1 needs |rho| < 1, got {rho}")));
        }
    }
    if let Distribution::StudentT { df: 0 } = r.distribution {
        return Err(Error::invalid("t degrees of freedom must be positive"));
    }
    Ok(())
}

fn build_sigma(p: usize, pattern: &SigmaPattern) -> Result<SparseSymMatrix<f64>> {
    match pattern {
        SigmaPattern::Identity => Ok(SparseSymMatrix::identity(p)),
        SigmaPattern::Ar1 { rho } => {
            let mut off = Vec::new();
            for j in 0..p {
                let mut v = 1.0;
                for l in (j + 1)..p {
                    v *= rho;
                    if v == 0.0 {
                        break;
                    }
                    off.push((j, l, v));
                }
            }
            SparseSymMatrix::new(vec![1.0; p], off)
        }
        SigmaPattern::Banded { width, value } => {
            let off = (0..p)
                .flat_map(|j| ((j + 1)..p.min(j + width + 1)).map(move |l| (j, l, *value)))
                .collect();
            let m = SparseSymMatrix::new(vec![1.0; p], off)?;
            let eig = sparse_eigenvalues(&m, usize::MAX)?.expect("no block limit");
            let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
            if !(min > 0.0) {
                return Err(Error::invalid(format!(
                    "banded covariance (width {width}, value {value}) is not positive definite: minimum eigenvalue {min:e}"
                )));
            }
            Ok(m)
        }
        SigmaPattern::FromFile(path) => {
            let m = read_covariance::<f64>(path)?;
            if m.dim() != p {
                return Err(Error::Shape {
                    expected: p,
                    got: m.dim(),
                });
            }
            Ok(m)
        }
    }
}

fn build_delta(p: usize, pattern: &DeltaPattern) -> Vec<f64> {
    match pattern {
        DeltaPattern::Sparse { count, magnitude, spacing } => {
            let mut d = vec![0.0; p];
            for j in 0..*count {
                d[j * spacing] = *magnitude;
            }
            d
        }
        DeltaPattern::Explicit(v) => v.clone(),
    }
}

/// `μ_1 = δ`, `μ_2 = 0`, `Σ` per pattern; positive definiteness verified.
pub fn build_population(recipe: &PopulationRecipe) -> Result<PopulationSpec<f64>> {
    validate_recipe(recipe)?;
    let sigma = build_sigma(recipe.p, &recipe.sigma)?;
    PopulationSpec::two_class(build_delta(recipe.p, &recipe.delta), sigma, recipe.distribution)
}

/// `n_1` draws from class 1 followed by `n_2` from class 2.
pub fn draw_training(pop: &PopulationSpec<f64>, n1: usize, n2: usize, stream: &mut RngStream) -> Result<Dataset<f64>> {
    let p = pop.p();
    let mut data = Vec::with_capacity((n1 + n2) * p);
    let mut labels = Vec::with_capacity(n1 + n2);
    for (k, nk) in [(1, n1), (2, n2)] {
        for _ in 0..nk {
            let x = match pop.distribution() {
                Distribution::Normal => sample_mvn(pop.mean(k), pop.factor(), stream)?,
                Distribution::StudentT { df } => sample_mvt(pop.mean(k), pop.factor(), df, stream)?,
            };
            data.extend(x);
            labels.push(k);
        }
    }
    Dataset::new(Matrix::from_vec(n1 + n2, p, data)?, labels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub method: Method,
    /// `None` when fitting or evaluation failed; see `error`.
    pub rate: Option<RateReport>,
    pub chosen: Option<(f64, f64)>,
    pub sparsity: Option<SparsityReport>,
    pub pd_flag: Option<bool>,
    pub error: Option<String>,
}

impl ReplicateRecord {
    pub fn conditional_rate(&self) -> Option<f64> {
        self.rate.as_ref().map(|r| r.conditional_rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub ok: usize,
    pub failed: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub seed: u64,
    pub reps: usize,
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
    pub distribution: String,
    /// How `Σ` enters the population.
    pub sigma_role: String,
    pub delta_p: f64,
    /// Bayes rate `Φ(-Δ_p/2)`; only for normal populations.
    pub optimal_rate: Option<f64>,
    pub n_mc: Option<usize>,
    pub methods: Vec<MethodSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub records: Vec<ReplicateRecord>,
    pub summary: ScenarioSummary,
}

impl ScenarioRun {
    /// Successful rates of one method in replicate order.
    pub fn rates(&self, method: Method) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.method == method)
            .filter_map(ReplicateRecord::conditional_rate)
            .collect()
    }

    pub fn method_summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summary.methods.iter().find(|m| m.method == method.name())
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    sorted_quantile(&v, 0.5)
}

fn summarize_method(method: Method, records: &[ReplicateRecord]) -> MethodSummary {
    let mut rates: Vec<f64> = records
        .iter()
        .filter(|r| r.method == method)
        .filter_map(ReplicateRecord::conditional_rate)
        .collect();
    let failed = records.iter().filter(|r| r.method == method && r.rate.is_none()).count();
    let ok = rates.len();
    let mean = if ok == 0 { f64::NAN } else { rates.iter().sum::<f64>() / ok as f64 };
    rates.sort_by(f64::total_cmp);
    MethodSummary {
        method: method.name().to_string(),
        ok,
        failed,
        mean,
        median: sorted_quantile(&rates, 0.5),
        q1: sorted_quantile(&rates, 0.25),
        q3: sorted_quantile(&rates, 0.75),
        min: rates.first().copied().unwrap_or(f64::NAN),
        max: rates.last().copied().unwrap_or(f64::NAN),
    }
}

struct Fitted {
    rule: LinearRule<f64>,
    chosen: Option<(f64, f64)>,
    sparsity: Option<SparsityReport>,
    pd_flag: Option<bool>,
}

fn fit_method(
    method: Method,
    scenario: &Scenario,
    pop: &PopulationSpec<f64>,
    oracle: &Result<LinearRule<f64>>,
    data: &Dataset<f64>,
) -> Result<Fitted> {
    let plain = |rule| Fitted {
        rule,
        chosen: None,
        sparsity: None,
        pd_flag: None,
    };
    match method {
        Method::Slda => {
            let config = match &scenario.tuning {
                Tuning::Fixed(c) => *c,
                Tuning::Cv { m1_grid, m2_grid, alpha } => {
                    let defaults;
                    let (g1, g2) = match (m1_grid, m2_grid) {
                        (Some(a), Some(b)) => (a, b),
                        _ => {
                            defaults = default_grids(data, *alpha)?;
                            (m1_grid.as_ref().unwrap_or(&defaults.0), m2_grid.as_ref().unwrap_or(&defaults.1))
                        }
                    };
                    let s = cv_grid_search(data, g1, g2, *alpha)?;
                    ThresholdConfig::new(s.best.0, s.best.1, *alpha)?
                }
            };
            let (rule, rep) = build_slda(data, &config)?;
            Ok(Fitted {
                rule,
                chosen: matches!(scenario.tuning, Tuning::Cv { .. }).then_some((config.m1, config.m2)),
                pd_flag: Some(rep.pd_flag),
                sparsity: Some(rep),
            })
        }
        Method::Lda => {
            let (rule, inv) = fit_lda(data)?;
            Ok(Fitted {
                pd_flag: Some(inv.pd_flag()),
                ..plain(rule)
            })
        }
        Method::LdaKnownSigma => Ok(plain(build_lda_known_factor(data, pop.factor())?)),
        Method::Oracle => match oracle {
            Ok(r) => Ok(plain(r.clone())),
            Err(e) => Err(e.duplicate()),
        },
    }
}

fn rate_against(
    rule: &LinearRule<f64>,
    pop: &PopulationSpec<f64>,
    n_mc: usize,
    stream: &RngStream,
) -> Result<RateReport> {
    if pop.is_normal() {
        conditional_rate(rule, pop)
    } else {
        conditional_rate_mc_projected(rule, pop, n_mc, stream)
    }
}

fn run_replicate(
    scenario: &Scenario,
    pop: &PopulationSpec<f64>,
    oracle: &Result<LinearRule<f64>>,
    k: usize,
) -> Vec<ReplicateRecord> {
    let base = RngStream::substream(scenario.seed, k as u64);
    let data = draw_training(pop, scenario.n1, scenario.n2, &mut base.derive(0));
    scenario
        .methods
        .iter()
        .map(|&method| {
            let outcome = data.as_ref().map_err(Error::duplicate).and_then(|d| {
                let f = fit_method(method, scenario, pop, oracle, d)?;
                let rate = rate_against(&f.rule, pop, scenario.n_mc, &base.derive(1 + method.index()))?;
                Ok((f, rate))
            });
            match outcome {
                Ok((f, rate)) => ReplicateRecord {
                    replicate: k,
                    method,
                    rate: Some(rate),
                    chosen: f.chosen,
                    sparsity: f.sparsity,
                    pd_flag: f.pd_flag,
                    error: None,
                },
                Err(e) => ReplicateRecord {
                    replicate: k,
                    method,
                    rate: None,
                    chosen: None,
                    sparsity: None,
                    pd_flag: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Runs every replicate (in parallel, collected in replicate order) and
/// summarizes per method. Failed fits are recorded, not retried.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioRun> {
    scenario.validate()?;
    let pop = build_population(&scenario.recipe)?;
    let oracle = build_oracle(&pop);
    let records: Vec<ReplicateRecord> = (0..scenario.reps)
        .into_par_iter()
        .map(|k| run_replicate(scenario, &pop, &oracle, k))
        .collect::<Vec<_>>()
        .concat();
    let methods = scenario.methods.iter().map(|&m| summarize_method(m, &records)).collect();
    let (distribution, sigma_role) = match pop.distribution() {
        Distribution::Normal => ("normal".to_string(), "covariance".to_string()),
        Distribution::StudentT { df } => (
            format!("student_t {df}"),
            if df > 2 {
                format!("scale matrix; covariance = {} x sigma", df as f64 / (df as f64 - 2.0))
            } else {
                "scale matrix; covariance infinite".to_string()
            },
        ),
    };
    let summary = ScenarioSummary {
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        reps: scenario.reps,
        p: pop.p(),
        n1: scenario.n1,
        n2: scenario.n2,
        distribution,
        sigma_role,
        delta_p: crate::evaluate::mahalanobis(&pop)?,
        optimal_rate: optimal_rate(&pop).ok().map(|r| r.conditional_rate),
        n_mc: (!pop.is_normal()).then_some(scenario.n_mc),
        methods,
    };
    Ok(ScenarioRun { records, summary })
}

pub const REPLICATE_COLUMNS: [&str; 17] = [
    "scenario",
    "replicate",
    "method",
    "rate",
    "class1_error",
    "class2_error",
    "rate_kind",
    "stderr",
    "n_mc",
    "m1",
    "m2",
    "q_hat",
    "nnz_offdiag",
    "pd_flag",
    "degenerate",
    "status",
    "error",
];

/// One CSV row per replicate per method (long format).
pub fn format_replicates_csv(scenario: &str, records: &[ReplicateRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPLICATE_COLUMNS)?;
    let opt_f = |v: Option<f64>| v.map(format_exact).unwrap_or_default();
    for r in records {
        let (rate, e1, e2, kind, se, nmc, degen) = match &r.rate {
            Some(rep) => {
                let (kind, se, nmc) = match rep.method {
                    crate::evaluate::RateMethod::ClosedForm => ("closed_form", None, None),
                    crate::evaluate::RateMethod::MonteCarlo { n_mc, stderr } => ("monte_carlo", Some(stderr), Some(n_mc)),
                    crate::evaluate::RateMethod::Empirical { n_test } => ("empirical", None, Some(n_test)),
                };
                (
                    format_exact(rep.conditional_rate),
                    format_exact(rep.per_class_error[0]),
                    format_exact(rep.per_class_error[1]),
                    kind,
                    opt_f(se),
                    nmc.map(|v| v.to_string()).unwrap_or_default(),
                    rep.degenerate.to_string(),
                )
            }
            None => Default::default(),
        };
        w.write_record([
            scenario.to_string(),
            r.replicate.to_string(),
            r.method.name().to_string(),
            rate,
            e1,
            e2,
            kind.to_string(),
            se,
            nmc,
            opt_f(r.chosen.map(|c| c.0)),
            opt_f(r.chosen.map(|c| c.1)),
            r.sparsity.map(|s| s.q_hat.to_string()).unwrap_or_default(),
            r.sparsity.map(|s| s.nnz_offdiag.to_string()).unwrap_or_default(),
            r.pd_flag.map(|b| b.to_string()).unwrap_or_default(),
            degen,
            if r.error.is_some() { "failed" } else { "ok" }.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Summary as TOML text.
pub fn format_summary(summary: &ScenarioSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# conditional misclassification rates over replicates");
    s.push_str(&toml::to_string(summary).expect("summary serializes"));
    s
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: Option<String>,
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
    pub delta_count: Option<usize>,
    pub delta_magnitude: Option<f64>,
    pub delta_spacing: Option<usize>,
    pub delta_values: Option<Vec<f64>>,
    /// `identity`, `ar1`, `banded` or `file`.
    pub sigma: Option<String>,
    pub rho: Option<f64>,
    pub band_width: Option<usize>,
    pub band_value: Option<f64>,
    pub sigma_file: Option<PathBuf>,
    /// `normal` or `student_t`.
    pub distribution: Option<String>,
    pub df: Option<u32>,
    pub methods: Option<Vec<String>>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub alpha: Option<f64>,
    pub cv: Option<bool>,
    pub grid_m1: Option<Vec<f64>>,
    pub grid_m2: Option<Vec<f64>>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub n_mc: Option<usize>,
}

impl ScenarioFile {
    /// Missing keys take the defaults: identity `Σ`, normal, all methods
    /// but `lda_known_sigma`, `ThresholdConfig::default()`, 100 reps, seed 1.
    pub fn into_scenario(self, base_dir: Option<&Path>) -> Result<Scenario> {
        let delta = match (self.delta_values, self.delta_count) {
            (Some(v), None) => DeltaPattern::Explicit(v),
            (None, Some(count)) => DeltaPattern::Sparse {
                count,
                magnitude: self.delta_magnitude.unwrap_or(1.0),
                spacing: self.delta_spacing.unwrap_or(1),
            },
            _ => return Err(Error::invalid("give exactly one of delta_values or delta_count")),
        };
        let sigma = match self.sigma.as_deref().unwrap_or("identity") {
            "identity" => SigmaPattern::Identity,
            "ar1" => SigmaPattern::Ar1 {
                rho: self.rho.ok_or_else(|| Error::invalid("ar1 needs rho"))?,
            },
            "banded" => SigmaPattern::Banded {
                width: self.band_width.unwrap_or(1),
                value: self.band_value.ok_or_else(|| Error::invalid("banded needs band_value"))?,
            },
            "file" => {
                let f = self.sigma_file.ok_or_else(|| Error::invalid("sigma = \"file\" needs sigma_file"))?;
                SigmaPattern::FromFile(match base_dir {
                    Some(d) if f.is_relative() => d.join(f),
                    _ => f,
                })
            }
            other => return Err(Error::invalid(format!("unknown sigma pattern `{other}`"))),
        };
        let distribution = match self.distribution.as_deref().unwrap_or("normal") {
            "normal" => Distribution::Normal,
            "student_t" => Distribution::StudentT {
                df: self.df.ok_or_else(|| Error::invalid("student_t needs df"))?,
            },
            other => return Err(Error::invalid(format!("unknown distribution `{other}`"))),
        };
        let methods = match self.methods {
            Some(m) => m.iter().map(|s| Method::parse(s)).collect::<Result<Vec<_>>>()?,
            None => vec![Method::Slda, Method::Lda, Method::Oracle],
        };
        let defaults = ThresholdConfig::default();
        let alpha = self.alpha.unwrap_or(defaults.alpha);
        let tuning = if self.cv.unwrap_or(false) {
            Tuning::Cv {
                m1_grid: self.grid_m1,
                m2_grid: self.grid_m2,
                alpha,
            }
        } else {
            Tuning::Fixed(ThresholdConfig::new(
                self.m1.unwrap_or(defaults.m1),
                self.m2.unwrap_or(defaults.m2),
                alpha,
            )?)
        };
        let s = Scenario {
            name: self.name.unwrap_or_else(|| "custom".into()),
            recipe: PopulationRecipe {
                p: self.p,
                delta,
                sigma,
                distribution,
            },
            n1: self.n1,
            n2: self.n2,
            methods,
            tuning,
            reps: self.reps.unwrap_or(100),
            seed: self.seed.unwrap_or(1),
            n_mc: self.n_mc.unwrap_or(DEFAULT_N_MC),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let mut f = ScenarioFile {
            name: Some(s.name.clone()),
            p: s.recipe.p,
            n1: s.n1,
            n2: s.n2,
            methods: Some(s.methods.iter().map(|m| m.name().to_string()).collect()),
            reps: Some(s.reps),
            seed: Some(s.seed),
            n_mc: Some(s.n_mc),
            ..Default::default()
        };
        match &s.recipe.delta {
            DeltaPattern::Sparse { count, magnitude, spacing } => {
                f.delta_count = Some(*count);
                f.delta_magnitude = Some(*magnitude);
                f.delta_spacing = Some(*spacing);
            }
            DeltaPattern::Explicit(v) => f.delta_values = Some(v.clone()),
        }
        match &s.recipe.sigma {
            SigmaPattern::Identity => f.sigma = Some("identity".into()),
            SigmaPattern::Ar1 { rho } => {
                f.sigma = Some("ar1".into());
                f.rho = Some(*rho);
            }
            SigmaPattern::Banded { width, value } => {
                f.sigma = Some("banded".into());
                f.band_width = Some(*width);
                f.band_value = Some(*value);
            }
            SigmaPattern::FromFile(path) => {
                f.sigma = Some("file".into());
                f.sigma_file = Some(path.clone());
            }
        }
        match s.recipe.distribution {
            Distribution::Normal => f.distribution = Some("normal".into()),
            Distribution::StudentT { df } => {
                f.distribution = Some("student_t".into());
                f.df = Some(df);
            }
        }
        match &s.tuning {
            Tuning::Fixed(c) => {
                f.cv = Some(false);
                f.m1 = Some(c.m1);
                f.m2 = Some(c.m2);
                f.alpha = Some(c.alpha);
            }
            Tuning::Cv { m1_grid, m2_grid, alpha } => {
                f.cv = Some(true);
                f.grid_m1 = m1_grid.clone();
                f.grid_m2 = m2_grid.clone();
                f.alpha = Some(*alpha);
            }
        }
        f
    }
}

pub fn parse_scenario(text: &str, base_dir: Option<&Path>) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::invalid(format!("scenario file: {e}")))?;
    file.into_scenario(base_dir)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&std::fs::read_to_string(path)?, path.parent())
}

pub fn format_scenario(s: &Scenario) -> String {
    toml::to_string(&ScenarioFile::from_scenario(s)).expect("scenario serializes")
}

/// Default seed of the preset catalog.
pub const PRESET_SEED: u64 = 20_090_601;

pub const PRESET_NAMES: [&str; 6] = [
    "thm1_regime",
    "thm2_worst",
    "thm2_constant",
    "bicklev_worst",
    "thm3_sparse",
    "sec5_t3",
];

/// Sparse scenario with `R_OPT ≈ 0.03`: tridiagonal `Σ` (off-diagonal 0.3),
/// five isolated signals of 1.5, class sizes 47 and 25.
fn thm3_sparse() -> Scenario {
    Scenario {
        name: "thm3_sparse".into(),
        recipe: PopulationRecipe {
            p: 500,
            delta: DeltaPattern::Sparse {
                count: 5,
                magnitude: 1.5,
                spacing: 10,
            },
            sigma: SigmaPattern::Banded { width: 1, value: 0.3 },
            distribution: Distribution::Normal,
        },
        n1: 47,
        n2: 25,
        methods: vec![Method::Slda, Method::Lda, Method::Oracle],
        // t_n ≈ 0.59 clears the null sample covariances, a_n ≈ 1.0 the null mean differences
        tuning: Tuning::Fixed(ThresholdConfig {
            m1: 2.0,
            m2: 2.1,
            alpha: 0.3,
        }),
        reps: 50,
        seed: PRESET_SEED,
        n_mc: DEFAULT_N_MC,
    }
}

/// The preset catalog.
pub fn preset_scenarios() -> Vec<Scenario> {
    let thm1_n = 10_000usize;
    let thm1_p = (thm1_n as f64).powf(0.3).floor() as usize;
    let thm1 = Scenario {
        name: "thm1_regime".into(),
        recipe: PopulationRecipe {
            p: thm1_p,
            // every component 0.5 under ar1(0.5): Δ_p ≈ 1.23
            delta: DeltaPattern::Explicit(vec![0.5; thm1_p]),
            sigma: SigmaPattern::Ar1 { rho: 0.5 },
            distribution: Distribution::Normal,
        },
        n1: thm1_n / 2,
        n2: thm1_n / 2,
        methods: vec![Method::Slda, Method::Lda, Method::Oracle],
        tuning: Tuning::Fixed(ThresholdConfig {
            m1: 1.0,
            m2: 1.0,
            alpha: 0.3,
        }),
        reps: 20,
        seed: PRESET_SEED,
        n_mc: DEFAULT_N_MC,
    };
    let thm2_worst = Scenario {
        name: "thm2_worst".into(),
        recipe: PopulationRecipe {
            p: 5000,
            delta: DeltaPattern::Sparse {
                count: 1,
                magnitude: 1.0,
                spacing: 1,
            },
            sigma: SigmaPattern::Identity,
            distribution: Distribution::Normal,
        },
        n1: 50,
        n2: 50,
        methods: vec![Method::LdaKnownSigma, Method::Oracle],
        tuning: Tuning::Fixed(ThresholdConfig::default()),
        reps: 50,
        seed: PRESET_SEED,
        n_mc: DEFAULT_N_MC,
    };
    let thm2_constant = Scenario {
        name: "thm2_constant".into(),
        recipe: PopulationRecipe {
            p: 2000,
            // Δ_p² = 20 = p/n
            delta: DeltaPattern::Sparse {
                count: 20,
                magnitude: 1.0,
                spacing: 1,
            },
            sigma: SigmaPattern::Identity,
            distribution: Distribution::Normal,
        },
        n1: 50,
        n2: 50,
        methods: vec![Method::LdaKnownSigma, Method::Oracle],
        tuning: Tuning::Fixed(ThresholdConfig::default()),
        reps: 50,
        seed: PRESET_SEED,
        n_mc: DEFAULT_N_MC,
    };
    let bicklev = Scenario {
        name: "bicklev_worst".into(),
        recipe: PopulationRecipe {
            p: 500,
            // Δ_p = 3
            delta: DeltaPattern::Sparse {
                count: 4,
                magnitude: 1.5,
                spacing: 1,
            },
            sigma: SigmaPattern::Identity,
            distribution: Distribution::Normal,
        },
        n1: 20,
        n2: 20,
        methods: vec![Method::Slda, Method::Lda, Method::Oracle],
        // t_n ≈ 0.99, a_n ≈ 1.0
        tuning: Tuning::Fixed(ThresholdConfig {
            m1: 2.5,
            m2: 2.0,
            alpha: 0.3,
        }),
        reps: 50,
        seed: PRESET_SEED,
        n_mc: DEFAULT_N_MC,
    };
    let thm3 = thm3_sparse();
    let mut t3 = thm3_sparse();
    t3.name = "sec5_t3".into();
    t3.recipe.distribution = Distribution::StudentT { df: 3 };
    vec![thm1, thm2_worst, thm2_constant, bicklev, thm3, t3]
}

pub fn preset(name: &str) -> Option<Scenario> {
    preset_scenarios().into_iter().find(|s| s.name == name)
}
