//! Empirical checks of the working assumptions behind exponential Bayes
//! factor decay, evaluated along an increasing grid of sample sizes.
//!
//! Nothing here proves an assumption; each verdict is a finite-n surrogate.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, SpdMatrix};
use crate::marginal::whitened_form;
use crate::model::{se_correlation, Dataset, ModelMoments, ModelSpec, SubsetMask};

/// `(μ_s − μᵗ)ᵀ(noise + Σ_s)⁻¹(μ_s − μᵗ)`.
pub fn delta_ns(cand: &ModelMoments, truth: &ModelMoments) -> Result<f64> {
    check_dim("candidate and truth", truth.n(), cand.n())?;
    cand.marginal_spd()?.quad_form(&(&cand.mu - &truth.mu))
}

/// Largest eigenvalue of `A = K_truth·K_s⁻¹`, via its symmetric similar form.
pub fn lambda_max_a(cand: &ModelMoments, truth: &ModelMoments) -> Result<f64> {
    check_dim("candidate and truth", truth.n(), cand.n())?;
    whitened_form(&cand.marginal_spd()?, &truth.marginal_spd()?)?.lambda_max()
}

/// Largest off-diagonal row sum of a unit-diagonal correlation matrix.
pub fn a4_rowsum(corr: &DMatrix<f64>) -> Result<f64> {
    check_dim("square kernel columns", corr.nrows(), corr.ncols())?;
    linalg::check_symmetric(corr)?;
    if corr.diagonal().iter().any(|d| (d - 1.0).abs() > 1e-12) {
        return Err(Error::InvalidInput("kernel matrix must have unit diagonal".into()));
    }
    Ok((0..corr.nrows())
        .map(|i| corr.row(i).sum() - corr[(i, i)])
        .fold(0.0, f64::max))
}

/// `½[tr A − log|A| − n + Δ]/n`: the Gaussian KL divergence from the true
/// marginal to the candidate's, per observation.
pub fn kl_per_n(cand: &ModelMoments, truth: &ModelMoments) -> Result<f64> {
    check_dim("candidate and truth", truth.n(), cand.n())?;
    let cand_cov = cand.marginal_spd()?;
    let c = whitened_form(&cand_cov, &truth.marginal_spd()?)?;
    let delta = cand_cov.quad_form(&(&cand.mu - &truth.mu))?;
    let n = cand.n() as f64;
    Ok(0.5 * (c.trace() - c.log_det() - n + delta) / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditThresholds {
    /// A1 passes when the last-half minimum of `Δ/n` reaches this value.
    pub a1_pass: f64,
    /// A1 fails when the maximum of `Δ/n` stays below this value.
    pub a1_fail: f64,
    /// A2–A4 pass when the last-half maximum is at most this multiple of the
    /// first-half maximum.
    pub growth_ratio: f64,
}

impl Default for AuditThresholds {
    fn default() -> Self {
        AuditThresholds {
            a1_pass: 1e-3,
            a1_fail: 1e-6,
            growth_ratio: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub a1: Verdict,
    pub a2: Verdict,
    pub a3: Verdict,
    pub a4: Verdict,
}

/// Per-n series for one candidate against the truth. All series are
/// empirical finite-n values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub subset: SubsetMask,
    pub truth: SubsetMask,
    pub n_grid: Vec<usize>,
    pub delta_over_n: Vec<f64>,
    pub lambda_max_a: Vec<f64>,
    pub mean_gap_over_n: Vec<f64>,
    pub kl_over_n: Vec<f64>,
    pub a4_rowsum: Option<Vec<f64>>,
    /// Last-half minimum of `Δ/n`, the empirical stand-in for ξ_s.
    pub xi_tail_min: f64,
    pub indistinguishable: bool,
    pub verdicts: Verdicts,
    pub thresholds: AuditThresholds,
}

fn first_half(v: &[f64]) -> &[f64] {
    &v[..v.len().div_ceil(2)]
}

fn last_half(v: &[f64]) -> &[f64] {
    &v[v.len() / 2..]
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn a1_verdict(delta_over_n: &[f64], t: &AuditThresholds) -> Verdict {
    if min_of(last_half(delta_over_n)) >= t.a1_pass {
        Verdict::Pass
    } else if max_of(delta_over_n) <= t.a1_fail {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

pub fn growth_verdict(series: &[f64], t: &AuditThresholds) -> Verdict {
    if max_of(last_half(series)) <= t.growth_ratio * max_of(first_half(series)) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Runs every check for `cand` against `truth` on prefixes of `data`.
pub fn audit(
    spec: &ModelSpec,
    data: &Dataset,
    cand: &SubsetMask,
    truth: &SubsetMask,
    n_grid: &[usize],
    thresholds: &AuditThresholds,
) -> Result<AuditReport> {
    if n_grid.is_empty() {
        return Err(Error::EmptyInput("audit n-grid"));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("n_grid", "must be strictly increasing"));
    }
    let mut delta_over_n = Vec::with_capacity(n_grid.len());
    let mut lambda_max = Vec::with_capacity(n_grid.len());
    let mut gap_over_n = Vec::with_capacity(n_grid.len());
    let mut kl_over_n = Vec::with_capacity(n_grid.len());
    let mut rowsums = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let d = data.prefix(n)?;
        let mc = spec.build(&d, cand)?;
        let mt = spec.build(&d, truth)?;
        let cand_cov = mc.marginal_spd()?;
        let truth_cov: SpdMatrix = mt.marginal_spd()?;
        let c = whitened_form(&cand_cov, &truth_cov)?;
        let gap = &mc.mu - &mt.mu;
        let delta = cand_cov.quad_form(&gap)?;
        let nf = n as f64;
        delta_over_n.push(delta / nf);
        lambda_max.push(c.lambda_max()?);
        gap_over_n.push(gap.norm_squared() / nf);
        kl_over_n.push(0.5 * (c.trace() - c.log_det() - nf + delta) / nf);
        if let ModelSpec::Se(se) = spec {
            rowsums.push(a4_rowsum(&se_correlation(&d, cand, &se.precision)?)?);
        }
    }
    let a4_rowsum = matches!(spec, ModelSpec::Se(_)).then_some(rowsums);
    let indistinguishable = cand == truth || kl_over_n.iter().all(|k| k.abs() <= 1e-12);
    let verdicts = Verdicts {
        a1: a1_verdict(&delta_over_n, thresholds),
        a2: growth_verdict(&lambda_max, thresholds),
        a3: growth_verdict(&gap_over_n, thresholds),
        a4: a4_rowsum
            .as_deref()
            .map_or(Verdict::NotApplicable, |r| growth_verdict(r, thresholds)),
    };
    Ok(AuditReport {
        subset: cand.clone(),
        truth: truth.clone(),
        n_grid: n_grid.to_vec(),
        xi_tail_min: min_of(last_half(&delta_over_n)),
        delta_over_n,
        lambda_max_a: lambda_max,
        mean_gap_over_n: gap_over_n,
        kl_over_n,
        a4_rowsum,
        indistinguishable,
        verdicts,
        thresholds: *thresholds,
    })
}
