//! Integrated Bayes factors over the AR(1) coefficient.
//!
//! Each candidate's marginal is averaged over a uniform prior on ρ with
//! Gauss-Legendre grids of increasing size; a point-mass grid at the true ρ
//! recovers the fixed-ρ Bayes factor.
//!
//! ```bash
//! cargo run --release -p gpbf --example ar1_integrated_bf
//! ```

use gpbf::marginal::{integrated_log_bf_gaussian, log_bf_known_var, GaussianMarginal};
use gpbf::model::{build_ar1_zellner, Ar1Spec, Dataset, SubsetMask};
use gpbf::quadrature::{Prior1d, QuadratureGrid};
use gpbf::sim::{generate_covariates, replicate_streams, sample_true};

fn main() -> gpbf::Result<()> {
    let n = 150;
    let spec = Ar1Spec {
        rho: 0.5,
        gamma: 0.1,
        beta0: vec![1.0, -0.8, 0.6],
        sigma_beta_sq: 1.0,
        g: 1.0,
        sigma_eps_sq: 1.0,
    };
    let s0 = SubsetMask::new(vec![1, 2])?;
    let (mut cov_rng, mut noise_rng) = replicate_streams(3, 0);
    let data = Dataset::design_only(generate_covariates(&mut cov_rng, n, 3, 1.0), 1.0)?;
    let truth = GaussianMarginal::from_moments(&build_ar1_zellner(&data, &s0, &spec)?)?;
    let y = sample_true(&build_ar1_zellner(&data, &s0, &spec)?, &mut noise_rng)?;
    let prior = [Prior1d::Uniform { lo: -0.9, hi: 0.9 }];

    println!("{:<8} {:>12} {:>12} {:>12} {:>12} {:>10}", "subset", "fixed rho", "point mass", "64 nodes", "128 nodes", "|64-128|");
    for s in [SubsetMask::new(vec![1])?, s0.clone(), SubsetMask::new(vec![1, 2, 3])?] {
        let builder = |theta: &[f64]| {
            let cand = build_ar1_zellner(&data, &s, &spec.with_rho(theta[0]))?;
            Ok((GaussianMarginal::from_moments(&cand)?, truth.clone()))
        };
        let fixed = log_bf_known_var(&y, &GaussianMarginal::from_moments(&build_ar1_zellner(&data, &s, &spec)?)?, &truth)?;
        let point = integrated_log_bf_gaussian(&y, builder, &QuadratureGrid::point_mass(vec![spec.rho])?)?;
        let g64 = integrated_log_bf_gaussian(&y, builder, &QuadratureGrid::gauss_legendre(&prior, 64)?)?;
        let g128 = integrated_log_bf_gaussian(&y, builder, &QuadratureGrid::gauss_legendre(&prior, 128)?)?;
        println!(
            "{:<8} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>10.2e}",
            s.to_string(),
            fixed,
            point,
            g64,
            g128,
            (g64 - g128).abs()
        );
    }
    Ok(())
}
