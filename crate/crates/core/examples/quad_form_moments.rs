//! Closed-form moments of `zᵀCz` for standard normal `z` against Monte
//! Carlo estimates.
//!
//! ```bash
//! cargo run --release -p gpbf --example quad_form_moments
//! ```

use gpbf::marginal::WhitenedForm;
use gpbf::sim::mc_moment_check;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn main() -> gpbf::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let n = 6;
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let c = WhitenedForm::from_matrix(g.transpose() * g / n as f64)?;
    let report = mc_moment_check(&c, 100_000, &mut rng)?;
    let names = ["E[Q]", "E[Q^2]", "E[Q^3]", "E[Q^4]", "E[(Q-trC)^4]"];
    println!("{:<14} {:>14} {:>14} {:>12} {:>6}", "moment", "closed form", "Monte Carlo", "std error", "ok");
    for k in 0..5 {
        println!(
            "{:<14} {:>14.5} {:>14.5} {:>12.5} {:>6}",
            names[k], report.closed_forms[k], report.estimates[k], report.std_errors[k], report.within[k]
        );
    }
    let mut wrong = report.closed_forms;
    wrong[3] *= 1.1;
    println!("perturbed fourth moment detected: {}", !report.against(wrong).passed());
    Ok(())
}
