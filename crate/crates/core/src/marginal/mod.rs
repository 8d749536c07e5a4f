//! Log marginal likelihoods and (integrated) log Bayes factors.
//!
//! Known error variance gives a Gaussian marginal; an inverse-gamma prior on
//! the error variance gives a multivariate-t marginal. Integrated Bayes
//! factors average over a hyperparameter prior on a [`QuadratureGrid`].

mod whitened;
pub mod zellner;

pub use whitened::{central_fourth_moment, quad_form_moments, whitened_form, WhitenedForm};

use nalgebra::DVector;
use statrs::function::gamma::ln_gamma;

use crate::error::{check_dim, Error, Result};
use crate::linalg::SpdMatrix;
use crate::model::ModelMoments;
use crate::quadrature::QuadratureGrid;

const LN_2PI: f64 = 1.8378770664093454835606594728112;

/// The pieces every marginal needs: dimension, log-determinant of the
/// (scale) covariance and the Mahalanobis residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalParts {
    pub n: usize,
    pub log_det: f64,
    pub quad: f64,
}

impl MarginalParts {
    /// `−½[n·log 2π + log|K| + q]`.
    pub fn gaussian(&self) -> f64 {
        -0.5 * (self.n as f64 * LN_2PI + self.log_det + self.quad)
    }

    /// Multivariate-t log density with df `2(α−1)` and shape `2β·S`
    /// (parts computed with the scale matrix `S`).
    pub fn student_t(&self, alpha: f64, beta: f64) -> f64 {
        let half_n = 0.5 * self.n as f64;
        let a = alpha - 1.0;
        ln_gamma(a + half_n)
            - ln_gamma(a)
            - half_n * (2.0 * std::f64::consts::PI * beta).ln()
            - 0.5 * self.log_det
            - (a + half_n) * (self.quad / (2.0 * beta)).ln_1p()
    }
}

/// `N(mu, cov)` with the factorization of `cov` cached.
#[derive(Debug, Clone)]
pub struct GaussianMarginal {
    mu: DVector<f64>,
    cov: SpdMatrix,
}

impl GaussianMarginal {
    pub fn new(mu: DVector<f64>, cov: SpdMatrix) -> Result<Self> {
        check_dim("marginal mean", cov.dim(), mu.len())?;
        Ok(GaussianMarginal { mu, cov })
    }

    pub fn from_moments(m: &ModelMoments) -> Result<Self> {
        Self::new(m.mu.clone(), m.marginal_spd()?)
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn cov(&self) -> &SpdMatrix {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn parts(&self, y: &DVector<f64>) -> Result<MarginalParts> {
        check_dim("response length", self.dim(), y.len())?;
        Ok(MarginalParts {
            n: self.dim(),
            log_det: self.cov.log_det(),
            quad: self.cov.quad_form(&(y - &self.mu))?,
        })
    }
}

pub fn log_marginal_gaussian(y: &DVector<f64>, m: &GaussianMarginal) -> Result<f64> {
    Ok(m.parts(y)?.gaussian())
}

/// `log m_cand(y) − log m_truth(y)`.
pub fn log_bf_known_var(
    y: &DVector<f64>,
    cand: &GaussianMarginal,
    truth: &GaussianMarginal,
) -> Result<f64> {
    check_dim("candidate and truth dimensions", truth.dim(), cand.dim())?;
    Ok(log_marginal_gaussian(y, cand)? - log_marginal_gaussian(y, truth)?)
}

/// Marginal of `y` when `y | σ² ~ N(mu, σ²·S)` and the error variance is
/// integrated out: a multivariate t with location `mu`, shape `2β·S` and
/// `2(α−1)` degrees of freedom.
#[derive(Debug, Clone)]
pub struct StudentTMarginal {
    mu: DVector<f64>,
    scale: SpdMatrix,
    alpha: f64,
    beta: f64,
}

impl StudentTMarginal {
    pub fn new(mu: DVector<f64>, scale: SpdMatrix, alpha: f64, beta: f64) -> Result<Self> {
        check_dim("marginal mean", scale.dim(), mu.len())?;
        check_inverse_gamma(alpha, beta)?;
        Ok(StudentTMarginal {
            mu,
            scale,
            alpha,
            beta,
        })
    }

    /// Scale `S = (noise_cov + Σ_s)/σ²_ε`.
    pub fn from_moments(m: &ModelMoments, sigma_eps_sq: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(sigma_eps_sq.is_finite() && sigma_eps_sq > 0.0) {
            return Err(Error::InvalidInput(format!(
                "error variance {sigma_eps_sq} must be positive"
            )));
        }
        let scale = SpdMatrix::new(m.marginal_cov() / sigma_eps_sq)?;
        Self::new(m.mu.clone(), scale, alpha, beta)
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn scale(&self) -> &SpdMatrix {
        &self.scale
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn parts(&self, y: &DVector<f64>) -> Result<MarginalParts> {
        check_dim("response length", self.dim(), y.len())?;
        Ok(MarginalParts {
            n: self.dim(),
            log_det: self.scale.log_det(),
            quad: self.scale.quad_form(&(y - &self.mu))?,
        })
    }
}

pub fn check_inverse_gamma(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 2.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must exceed 2")));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta = {beta} must be positive")));
    }
    Ok(())
}

pub fn log_marginal_t(y: &DVector<f64>, m: &StudentTMarginal) -> Result<f64> {
    Ok(m.parts(y)?.student_t(m.alpha, m.beta))
}

/// Closed-form ratio of two t marginals sharing `α` and `β`:
/// `½[log|S₀| − log|S_s|] − (α + n/2 − 1)·[log(q_s + 2β) − log(q₀ + 2β)]`.
pub fn log_bf_unknown_var(
    y: &DVector<f64>,
    cand: &StudentTMarginal,
    truth: &StudentTMarginal,
) -> Result<f64> {
    if cand.alpha != truth.alpha || cand.beta != truth.beta {
        return Err(Error::InvalidInput(
            "candidate and truth must share alpha and beta".into(),
        ));
    }
    check_dim("candidate and truth dimensions", truth.dim(), cand.dim())?;
    Ok(log_bf_t_parts(
        &cand.parts(y)?,
        &truth.parts(y)?,
        cand.alpha,
        cand.beta,
    ))
}

pub fn log_bf_t_parts(cand: &MarginalParts, truth: &MarginalParts, alpha: f64, beta: f64) -> f64 {
    let exponent = alpha + 0.5 * cand.n as f64 - 1.0;
    0.5 * (truth.log_det - cand.log_det)
        - exponent * ((cand.quad + 2.0 * beta).ln() - (truth.quad + 2.0 * beta).ln())
}

/// `log Σ_i w_i·π(θ_i)·BF(θ_i)` where `log_bf` evaluates `log BF(θ)`.
pub fn integrated_log_bf<F>(grid: &QuadratureGrid, log_bf: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    grid.log_integrate(log_bf)
}

/// Integrated Bayes factor for a builder `θ ↦ (candidate, truth)`.
pub fn integrated_log_bf_gaussian<F>(
    y: &DVector<f64>,
    mut builder: F,
    grid: &QuadratureGrid,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<(GaussianMarginal, GaussianMarginal)>,
{
    grid.log_integrate(|theta| {
        let (cand, truth) = builder(theta)?;
        log_bf_known_var(y, &cand, &truth)
    })
}
