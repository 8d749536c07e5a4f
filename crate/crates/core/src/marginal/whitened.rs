use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, SpdMatrix};

/// `C = Bᵀ·K_s⁻¹·B` where `B` is the Cholesky factor of the true marginal
/// covariance and `K_s` the candidate's. `C` is similar to
/// `A = K_truth·K_s⁻¹`, so the two share trace, determinant and spectrum.
#[derive(Debug, Clone)]
pub struct WhitenedForm {
    c: DMatrix<f64>,
    log_det: f64,
}

pub fn whitened_form(cand_cov: &SpdMatrix, truth_cov: &SpdMatrix) -> Result<WhitenedForm> {
    check_dim("candidate and truth covariance", truth_cov.dim(), cand_cov.dim())?;
    let w = cand_cov.whiten_matrix(truth_cov.factor())?;
    let c = w.transpose() * &w;
    Ok(WhitenedForm {
        c: (&c + c.transpose()) * 0.5,
        log_det: truth_cov.log_det() - cand_cov.log_det(),
    })
}

impl WhitenedForm {
    /// Wraps an arbitrary symmetric PSD matrix, e.g. for moment checks.
    pub fn from_matrix(c: DMatrix<f64>) -> Result<Self> {
        linalg::check_symmetric(&c)?;
        let eig = linalg::symmetric_eigenvalues(&c)?;
        let scale = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if eig.iter().any(|v| *v < -1e-10 * scale.max(1.0)) {
            return Err(Error::InvalidInput("whitened form must be PSD".into()));
        }
        let log_det = eig.iter().map(|v| v.ln()).sum();
        Ok(WhitenedForm { c, log_det })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.c.trace()
    }

    /// `log|C|`, taken from the two factorizations.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(linalg::symmetric_eigenvalues(&self.c)?.iter().copied().collect())
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(linalg::extreme_eigs(&self.c)?.1)
    }

    /// `[tr C, tr C², tr C³, tr C⁴]`.
    pub fn power_traces(&self) -> [f64; 4] {
        let c = &self.c;
        let c2 = c * c;
        [
            c.trace(),
            c.component_mul(c).sum(),
            c2.component_mul(c).sum(),
            c2.component_mul(&c2).sum(),
        ]
    }
}

/// `E[(zᵀCz)^k]` for `z ~ N(0, I)` and `k ∈ 1..=4`.
pub fn quad_form_moments(c: &WhitenedForm, order: usize) -> Result<f64> {
    let [t1, t2, t3, t4] = c.power_traces();
    match order {
        1 => Ok(t1),
        2 => Ok(t1 * t1 + 2.0 * t2),
        3 => Ok(t1.powi(3) + 6.0 * t1 * t2 + 8.0 * t3),
        4 => Ok(t1.powi(4) + 32.0 * t1 * t3 + 12.0 * t2 * t2 + 12.0 * t1 * t1 * t2 + 48.0 * t4),
        k => Err(Error::InvalidOrder(k)),
    }
}

/// `E[(zᵀCz − tr C)⁴] = 12(tr C²)² + 48 tr C⁴`.
pub fn central_fourth_moment(c: &WhitenedForm) -> f64 {
    let [_, t2, _, t4] = c.power_traces();
    12.0 * t2 * t2 + 48.0 * t4
}
