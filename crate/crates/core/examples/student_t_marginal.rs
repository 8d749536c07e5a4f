//! Marginal likelihood with the error variance integrated out.
//!
//! The closed-form multivariate t density is compared with a direct
//! integral over σ² of the Gaussian likelihood against the mixing density.
//!
//! ```bash
//! cargo run --release -p gpbf --example student_t_marginal
//! ```

use gpbf::linalg::SpdMatrix;
use gpbf::marginal::{log_bf_unknown_var, log_marginal_t, StudentTMarginal};
use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

/// `log ∫ N(y; mu, σ²S)·IG(σ²; α−1, β) dσ²` by the trapezoid rule in log σ².
fn by_quadrature(y: &DVector<f64>, mu: &DVector<f64>, s: &SpdMatrix, alpha: f64, beta: f64) -> f64 {
    let n = y.len() as f64;
    let q = s.quad_form(&(y - mu)).unwrap();
    let shape = alpha - 1.0;
    let log_integrand = |t: f64| {
        let v = t.exp();
        let gauss = -0.5 * (n * (2.0 * std::f64::consts::PI * v).ln() + s.log_det() + q / v);
        let ig = shape * beta.ln() - ln_gamma(shape) - (shape + 1.0) * t - beta / v;
        gauss + ig + t
    };
    let (lo, hi, m) = (-25.0, 25.0, 200_000);
    let h = (hi - lo) / m as f64;
    let vals: Vec<f64> = (0..=m).map(|i| log_integrand(lo + i as f64 * h)).collect();
    let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = vals
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 0 || i == m { 0.5 } else { 1.0 } * (v - top).exp())
        .sum();
    top + (sum * h).ln()
}

fn main() -> gpbf::Result<()> {
    let (alpha, beta) = (3.0, 2.0);
    for n in [1usize, 5, 10] {
        let a = DMatrix::from_fn(n, n, |i, j| ((i + 2 * j) as f64 * 0.37).sin());
        let scale = SpdMatrix::new(&a * a.transpose() * 0.2 + DMatrix::identity(n, n))?;
        let mu = DVector::from_fn(n, |i, _| 0.1 * i as f64);
        let y = DVector::from_fn(n, |i, _| (i as f64 * 1.3).cos());
        let t = StudentTMarginal::new(mu.clone(), scale.clone(), alpha, beta)?;
        let closed = log_marginal_t(&y, &t)?;
        let quad = by_quadrature(&y, &mu, &scale, alpha, beta);
        println!("n={n:>2}  closed {closed:>12.8}  quadrature {quad:>12.8}  diff {:.1e}", (closed - quad).abs());
    }

    let n = 8;
    let y = DVector::from_fn(n, |i, _| (i as f64).sin());
    let t1 = StudentTMarginal::new(DVector::zeros(n), SpdMatrix::scaled_identity(n, 1.5), alpha, beta)?;
    let t0 = StudentTMarginal::new(DVector::from_element(n, 0.2), SpdMatrix::identity(n), alpha, beta)?;
    let bf = log_bf_unknown_var(&y, &t1, &t0)?;
    let diff = log_marginal_t(&y, &t1)? - log_marginal_t(&y, &t0)?;
    println!("log BF {bf:.12} vs difference of marginals {diff:.12}");
    Ok(())
}
