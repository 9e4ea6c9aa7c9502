//! Sparsity and regularity quantities: `C_{h,p}`, `D_{g,p}`, `Δ_p`, the
//! threshold-bracket counts, the rate quantities `s_n`, `d_n`, `b_n`, the
//! eigenvalue / signal-strength condition check and cumulative proportions
//! of `δ̂²`. All logarithms are natural.

use crate::classify::thresholded_inverse;
use crate::error::{Error, Result};
use crate::estimation::{compute_an, summarize, threshold_delta, ClassStatistics, DEFAULT_FLOOR_EPS};
use crate::evaluate::mahalanobis;
use crate::model::{Dataset, PopulationSpec, ThresholdConfig};
use crate::numerics::{eigen_sym, Matrix, SparseSymMatrix};
use crate::scalar::{dot, Real};

/// Components larger than this are not eigendecomposed by the report builders.
pub const EIGEN_BLOCK_LIMIT: usize = 2000;

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::domain(format!("{name} must lie in [0, 1), got {v}")));
    }
    Ok(())
}

/// `|v|^e` with `0^0 = 0`.
fn pow0(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.abs().powf(e)
    }
}

/// `C_{h,p} = max_j Σ_l |σ_jl|^h`.
pub fn sparsity_c<T: Real>(sigma: &Matrix<T>, h: f64) -> Result<f64> {
    check_exponent("h", h)?;
    Ok((0..sigma.rows())
        .map(|j| sigma.row(j).iter().map(|v| pow0(v.as_f64(), h)).sum::<f64>())
        .fold(0.0, f64::max))
}

/// [`sparsity_c`] for sparse storage.
pub fn sparsity_c_sparse<T: Real>(sigma: &SparseSymMatrix<T>, h: f64) -> Result<f64> {
    check_exponent("h", h)?;
    let mut rows: Vec<f64> = sigma.diagonal().iter().map(|v| pow0(v.as_f64(), h)).collect();
    for &(i, j, v) in sigma.off_diagonal() {
        let t = pow0(v.as_f64(), h);
        rows[i] += t;
        rows[j] += t;
    }
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// `D_{g,p} = Σ_j |δ_j|^{2g}`.
pub fn sparsity_d<T: Real>(delta: &[T], g: f64) -> Result<f64> {
    check_exponent("g", g)?;
    Ok(delta.iter().map(|d| pow0(d.as_f64(), 2.0 * g)).sum())
}

/// `Δ_p = sqrt(δᵀΣ⁻¹δ)`.
pub fn mahalanobis_delta<T: Real>(pop: &PopulationSpec<T>) -> Result<f64> {
    mahalanobis(pop)
}

/// `(q_n0, q_n) = (#{|δ_j| > r·a_n}, #{|δ_j| > a_n/r})`.
pub fn lemma2_counts<T: Real>(delta: &[T], a_n: f64, r: f64) -> Result<(usize, usize)> {
    if !(r > 1.0) {
        return Err(Error::domain(format!("r must exceed 1, got {r}")));
    }
    if !(a_n >= 0.0) {
        return Err(Error::domain(format!("a_n must be nonnegative, got {a_n}")));
    }
    let count = |cut: f64| delta.iter().filter(|d| d.as_f64().abs() > cut).count();
    Ok((count(r * a_n), count(a_n / r)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateQuantities {
    pub s_n: f64,
    pub d_n: f64,
    pub a_n: f64,
    pub b_n: f64,
    /// The three candidates whose maximum is `b_n`.
    pub b_terms: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInputs {
    pub n: usize,
    pub p: usize,
    pub h: f64,
    pub g: f64,
    pub c_hp: f64,
    pub d_gp: f64,
    pub q_n: usize,
    pub delta_p: f64,
    pub alpha: f64,
    /// `M2` inside `a_n`; 1 when not given.
    pub m2: Option<f64>,
}

/// `s_n = p·sqrt(ln p)/sqrt(n)`, `d_n = C_{h,p}(ln p/n)^{(1-h)/2}`,
/// `a_n = M2 (ln p/n)^alpha` and
/// `b_n = max{d_n, a_n^{1-g} sqrt(D_{g,p})/Δ_p, sqrt(C_{h,p} q_n)/(Δ_p sqrt(n))}`.
pub fn rate_quantities(inp: &RateInputs) -> Result<RateQuantities> {
    check_exponent("h", inp.h)?;
    check_exponent("g", inp.g)?;
    if inp.p < 2 || inp.n < 1 {
        return Err(Error::domain(format!("need p ≥ 2 and n ≥ 1, got p = {}, n = {}", inp.p, inp.n)));
    }
    if !(inp.delta_p > 0.0) {
        return Err(Error::domain(format!("Δ_p must be positive, got {}", inp.delta_p)));
    }
    let (n, p) = (inp.n as f64, inp.p as f64);
    let lp = p.ln();
    let s_n = p * lp.sqrt() / n.sqrt();
    let d_n = inp.c_hp * (lp / n).powf((1.0 - inp.h) / 2.0);
    let a_n = compute_an(inp.m2.unwrap_or(1.0), inp.n, inp.p, inp.alpha)?;
    let b_terms = [
        d_n,
        a_n.powf(1.0 - inp.g) * inp.d_gp.sqrt() / inp.delta_p,
        (inp.c_hp * inp.q_n as f64).sqrt() / (inp.delta_p * n.sqrt()),
    ];
    let b_n = b_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RateQuantities {
        s_n,
        d_n,
        a_n,
        b_n,
        b_terms,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub c0: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    pub eigen_ok: bool,
    /// Eigenvalues outside `[1/c0, c0]`.
    pub offending_eigenvalues: Vec<f64>,
    pub max_delta_sq: f64,
    pub delta_ok: bool,
    pub delta_norm_sq: f64,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.eigen_ok && self.delta_ok
    }
}

/// All eigenvalues of a sparse symmetric matrix, from its connected blocks.
/// `None` when some block has more than `limit` rows.
pub fn sparse_eigenvalues<T: Real>(sigma: &SparseSymMatrix<T>, limit: usize) -> Result<Option<Vec<f64>>> {
    let parts = sigma.components();
    if parts.iter().any(|c| c.len() > limit) {
        return Ok(None);
    }
    let mut out = Vec::with_capacity(sigma.dim());
    for (idx, block) in parts.iter().zip(sigma.dense_blocks(&parts)) {
        if idx.len() == 1 {
            out.push(block[(0, 0)].as_f64());
        } else {
            out.extend(eigen_sym(&block)?.values().iter().map(|v| v.as_f64()));
        }
    }
    Ok(Some(out))
}

/// Checks that every eigenvalue of `Σ` and `max_j δ_j²` lie in `[1/c0, c0]`.
pub fn condition_check<T: Real>(pop: &PopulationSpec<T>, c0: f64) -> Result<ConditionReport> {
    if !(c0 > 1.0) {
        return Err(Error::domain(format!("c0 must exceed 1, got {c0}")));
    }
    let eig = sparse_eigenvalues(pop.covariance(), usize::MAX)?.expect("no block limit");
    let (lo, hi) = (1.0 / c0, c0);
    let offending: Vec<f64> = eig.iter().copied().filter(|&v| v < lo || v > hi).collect();
    let delta = pop.delta();
    let max_delta_sq = delta.iter().map(|d| d.as_f64().powi(2)).fold(0.0, f64::max);
    Ok(ConditionReport {
        c0,
        eig_min: eig.iter().copied().fold(f64::INFINITY, f64::min),
        eig_max: eig.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        eigen_ok: offending.is_empty(),
        offending_eigenvalues: offending,
        max_delta_sq,
        delta_ok: (lo..=hi).contains(&max_delta_sq),
        delta_norm_sq: dot(&delta, &delta).as_f64(),
    })
}

/// `Σ_{j ≤ l} δ̂²_(j) / ‖δ̂‖²` with `δ̂²` sorted in decreasing order.
pub fn cumulative_proportions<T: Real>(delta_hat: &[T]) -> Result<Vec<f64>> {
    let mut sq: Vec<f64> = delta_hat.iter().map(|d| d.as_f64().powi(2)).collect();
    let total: f64 = sq.iter().sum();
    if !(total > 0.0) {
        return Err(Error::domain("cumulative proportions need a nonzero mean difference"));
    }
    sq.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut out: Vec<f64> = sq
        .into_iter()
        .map(|v| {
            acc += v;
            (acc / total).min(1.0)
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    Ok(out)
}

/// Parameters shared by the report builders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsParams {
    pub h: f64,
    pub g: f64,
    pub r: f64,
    pub config: ThresholdConfig,
}

impl Default for DiagnosticsParams {
    fn default() -> Self {
        Self {
            h: 0.0,
            g: 0.0,
            r: 2.0,
            config: ThresholdConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub p: usize,
    pub delta_p: f64,
    pub c_hp: f64,
    pub d_gp: f64,
    pub h: f64,
    pub g: f64,
    pub r: f64,
    pub q_n0: usize,
    pub q_n: usize,
    pub q_hat: usize,
    pub s_n: f64,
    pub d_n: f64,
    pub a_n: f64,
    pub b_n: f64,
    /// `None` when the covariance has a connected block above [`EIGEN_BLOCK_LIMIT`].
    pub eig_min: Option<f64>,
    pub eig_max: Option<f64>,
    pub max_delta_sq: f64,
    pub delta_norm_sq: f64,
}

impl DiagnosticsReport {
    /// `key value` lines in a fixed order.
    pub fn to_lines(&self) -> Vec<(String, String)> {
        let opt = |v: Option<f64>| v.map_or("NA".to_string(), |x| x.to_string());
        vec![
            ("n".into(), self.n.to_string()),
            ("p".into(), self.p.to_string()),
            ("delta_p".into(), self.delta_p.to_string()),
            ("h".into(), self.h.to_string()),
            ("g".into(), self.g.to_string()),
            ("r".into(), self.r.to_string()),
            ("C_hp".into(), self.c_hp.to_string()),
            ("D_gp".into(), self.d_gp.to_string()),
            ("q_n0".into(), self.q_n0.to_string()),
            ("q_n".into(), self.q_n.to_string()),
            ("q_hat".into(), self.q_hat.to_string()),
            ("s_n".into(), self.s_n.to_string()),
            ("d_n".into(), self.d_n.to_string()),
            ("a_n".into(), self.a_n.to_string()),
            ("b_n".into(), self.b_n.to_string()),
            ("eig_min".into(), opt(self.eig_min)),
            ("eig_max".into(), opt(self.eig_max)),
            ("max_delta_sq".into(), self.max_delta_sq.to_string()),
            ("delta_norm_sq".into(), self.delta_norm_sq.to_string()),
        ]
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble<T: Real>(
    n: usize,
    sigma: &SparseSymMatrix<T>,
    delta: &[T],
    q_source: &[T],
    delta_p: f64,
    params: &DiagnosticsParams,
) -> Result<DiagnosticsReport> {
    let p = sigma.dim();
    let c_hp = sparsity_c_sparse(sigma, params.h)?;
    let d_gp = sparsity_d(delta, params.g)?;
    let a_n = compute_an(params.config.m2, n, p, params.config.alpha)?;
    let (q_n0, q_n) = lemma2_counts(delta, a_n, params.r)?;
    let q_hat = threshold_delta(q_source, T::of(a_n)).q_hat();
    let rq = rate_quantities(&RateInputs {
        n,
        p,
        h: params.h,
        g: params.g,
        c_hp,
        d_gp,
        q_n,
        delta_p,
        alpha: params.config.alpha,
        m2: Some(params.config.m2),
    })?;
    let eig = sparse_eigenvalues(sigma, EIGEN_BLOCK_LIMIT)?;
    Ok(DiagnosticsReport {
        n,
        p,
        delta_p,
        c_hp,
        d_gp,
        h: params.h,
        g: params.g,
        r: params.r,
        q_n0,
        q_n,
        q_hat,
        s_n: rq.s_n,
        d_n: rq.d_n,
        a_n: rq.a_n,
        b_n: rq.b_n,
        eig_min: eig.as_ref().map(|e| e.iter().copied().fold(f64::INFINITY, f64::min)),
        eig_max: eig.as_ref().map(|e| e.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        max_delta_sq: delta.iter().map(|d| d.as_f64().powi(2)).fold(0.0, f64::max),
        delta_norm_sq: dot(delta, delta).as_f64(),
    })
}

/// Report for a known population at sample size `n`. `q_hat` counts the
/// true `|δ_j|` above `a_n`.
pub fn diagnose_population<T: Real>(
    pop: &PopulationSpec<T>,
    n: usize,
    params: &DiagnosticsParams,
) -> Result<DiagnosticsReport> {
    params.config.validate()?;
    let delta = pop.delta();
    assemble(n, pop.covariance(), &delta, &delta, mahalanobis(pop)?, params)
}

/// Plug-in report from a two-class training set: `δ̂` in place of `δ` and
/// `Σ̃` (thresholded at the configured `M1`) in place of `Σ`; `Δ_p` is
/// `sqrt(δ̂ᵀ Σ̃⁻¹ δ̂)`.
pub fn diagnose_dataset<T: Real>(dataset: &Dataset<T>, params: &DiagnosticsParams) -> Result<DiagnosticsReport> {
    params.config.validate()?;
    if dataset.num_classes() != 2 {
        return Err(Error::invalid("diagnostics need a two-class dataset"));
    }
    let summary = summarize(dataset);
    let delta = summary.delta_hat();
    if delta.iter().all(|&d| d == T::zero()) {
        return Err(Error::domain("sample mean difference is zero"));
    }
    let inv = thresholded_inverse(&summary, params.config.m1, DEFAULT_FLOOR_EPS)?;
    let sigma = ClassStatistics::thresholded_covariance(&summary, T::of(inv.t_n));
    let x = inv.inverse.apply(&delta)?;
    let delta_p = dot(&delta, &x).as_f64().max(0.0).sqrt();
    assemble(dataset.n(), &sigma, &delta, &delta, delta_p, params)
}
