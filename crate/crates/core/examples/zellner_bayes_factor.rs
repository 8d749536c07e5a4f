//! Bayes factors under the linear Zellner g-prior for all subsets of three
//! covariates, with the determinant part compared against
//! `(|s0|-|s|)/2 · log(1 + σ²_β g/σ²_ε)`.
//!
//! ```bash
//! cargo run --release -p gpbf --example zellner_bayes_factor
//! ```

use gpbf::marginal::{log_bf_known_var, GaussianMarginal};
use gpbf::model::{build_linear_zellner, Dataset, LinearZellnerSpec, SubsetMask};
use gpbf::sim::{generate_covariates, replicate_streams, sample_true};

fn main() -> gpbf::Result<()> {
    let (n, p) = (300, 3);
    let spec = LinearZellnerSpec {
        beta0: vec![1.0, -0.7, 0.5],
        sigma_beta_sq: 1.0,
        g: 2.0,
        sigma_eps_sq: 1.0,
    };
    let s0 = SubsetMask::new(vec![1, 2])?;
    let (mut cov_rng, mut noise_rng) = replicate_streams(11, 0);
    let design = Dataset::design_only(generate_covariates(&mut cov_rng, n, p, 1.0), 1.0)?;

    let truth = build_linear_zellner(&design, &s0, &spec)?;
    let y = sample_true(&truth, &mut noise_rng)?;
    let truth_m = GaussianMarginal::from_moments(&truth)?;
    let c = spec.prior_scale() / spec.sigma_eps_sq;

    println!("{:<9} {:>12} {:>12} {:>14}", "subset", "log BF", "log BF / n", "det part");
    for s in SubsetMask::all(p) {
        let cand = GaussianMarginal::from_moments(&build_linear_zellner(&design, &s, &spec)?)?;
        let log_bf = log_bf_known_var(&y, &cand, &truth_m)?;
        let det_part = 0.5 * (truth_m.cov().log_det() - cand.cov().log_det());
        let closed = 0.5 * (s0.len() as f64 - s.len() as f64) * (1.0 + c).ln();
        println!(
            "{:<9} {:>12.4} {:>12.5} {:>14.3e}",
            s.to_string(),
            log_bf,
            log_bf / n as f64,
            det_part - closed
        );
    }
    Ok(())
}
