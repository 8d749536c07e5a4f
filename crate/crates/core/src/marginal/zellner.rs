//! Zellner-prior marginals from `p×p` sufficient statistics.
//!
//! With noise covariance `N = v·T⁻¹` (`T` the AR(1) tridiagonal precision,
//! `T = I` when `ρ = 0`) and prior covariance `c·P_s` on the filtered design
//! `Z_s`, the marginal covariance `K = N + c·P_s` satisfies
//!
//! ```text
//! log|K|   = n·log v − log(1−ρ²) + log|G + (c/v)·H| − log|G|
//! rᵀK⁻¹r   = rᵀN⁻¹r − c·aᵀ(G + (c/v)·H)⁻¹a,   a = Z_sᵀN⁻¹r
//! ```
//!
//! where `G = Z_sᵀZ_s` and `H = Z_sᵀTZ_s`. Only `O(n·p²)` work is needed per
//! `(n, ρ)` instead of an `n×n` factorization.

use nalgebra::{DMatrix, DVector};

use super::MarginalParts;
use crate::error::{check_dim, Error, Result};
use crate::model::{ar1_filter, SubsetMask};

#[derive(Debug, Clone)]
pub struct ZellnerStats {
    n: usize,
    rho: f64,
    gram: DMatrix<f64>,
    t_gram: DMatrix<f64>,
    t_cross: DVector<f64>,
    t_yy: f64,
}

impl ZellnerStats {
    /// Statistics for responses `y` and the unfiltered full design `x`.
    pub fn new(x: &DMatrix<f64>, y: &DVector<f64>, rho: f64) -> Result<Self> {
        let n = y.len();
        let p = x.ncols();
        check_dim("design rows", n, x.nrows())?;
        if n == 0 {
            return Err(Error::EmptyInput("no observations"));
        }
        if !(rho.abs() < 1.0) {
            return Err(Error::InvalidInput(format!("|rho| = {} must be < 1", rho.abs())));
        }
        let mut w = DMatrix::zeros(n, p + 1);
        w.columns_mut(0, p).copy_from(&ar1_filter(x, rho));
        w.set_column(p, y);
        let s0 = w.transpose() * &w;
        let tw = if rho == 0.0 {
            s0.clone()
        } else {
            let first = w.row(0).transpose();
            let last = w.row(n - 1).transpose();
            let ends = &first * first.transpose() + &last * last.transpose();
            let lag = if n > 1 {
                w.rows(0, n - 1).transpose() * w.rows(1, n - 1)
            } else {
                DMatrix::zeros(p + 1, p + 1)
            };
            let lag = &lag + lag.transpose();
            s0.clone() * (1.0 + rho * rho) - ends * (rho * rho) - lag * rho
        };
        Ok(ZellnerStats {
            n,
            rho,
            gram: s0.view((0, 0), (p, p)).into_owned(),
            t_gram: tw.view((0, 0), (p, p)).into_owned(),
            t_cross: tw.view((0, p), (p, 1)).column(0).into_owned(),
            t_yy: tw[(p, p)],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Marginal parts of `N(Z_s·β, v·T⁻¹ + c·P_s)` at the stored `y`.
    pub fn parts(
        &self,
        s: &SubsetMask,
        beta: &DVector<f64>,
        noise_var: f64,
        prior_scale: f64,
    ) -> Result<MarginalParts> {
        s.check_within(self.gram.nrows())?;
        check_dim("prior mean length", s.len(), beta.len())?;
        let n = self.n as f64;
        let noise_log_det = n * noise_var.ln() - (1.0 - self.rho * self.rho).ln();
        if s.is_empty() {
            return Ok(MarginalParts {
                n: self.n,
                log_det: noise_log_det,
                quad: self.t_yy / noise_var,
            });
        }
        let idx: Vec<usize> = s.zero_based().collect();
        let g = self.gram.select_rows(idx.iter()).select_columns(idx.iter());
        let h = self.t_gram.select_rows(idx.iter()).select_columns(idx.iter());
        let u = self.t_cross.select_rows(idx.iter());

        let rank_err = || Error::RankDeficient {
            subset: s.to_string(),
        };
        let g_chol = g.clone().cholesky().ok_or_else(rank_err)?;
        let scale = g.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.sqrt()));
        if g_chol.l_dirty().diagonal().iter().any(|d| *d <= 1e-10 * scale) {
            return Err(rank_err());
        }
        let m = &g + &h * (prior_scale / noise_var);
        let m_chol = m.cholesky().ok_or_else(rank_err)?;

        let log_det_of = |l: &DMatrix<f64>| 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let log_det = noise_log_det + log_det_of(m_chol.l_dirty()) - log_det_of(g_chol.l_dirty());

        let h_beta = &h * beta;
        let a = (&u - &h_beta) / noise_var;
        let resid = (self.t_yy - 2.0 * beta.dot(&u) + beta.dot(&h_beta)) / noise_var;
        let quad = resid - prior_scale * a.dot(&m_chol.solve(&a));
        Ok(MarginalParts {
            n: self.n,
            log_det,
            quad: quad.max(0.0),
        })
    }
}
