//! Empirical audit of the working assumptions for each candidate subset
//! under a squared-exponential truth.
//!
//! ```bash
//! cargo run --release -p gpbf --example assumption_audit
//! ```

use gpbf::config::{ExperimentConfig, Family};
use gpbf::report::audit_label;
use gpbf::sim::run_audit;

fn main() -> gpbf::Result<()> {
    let mut cfg = ExperimentConfig::default_for(Family::Se, 5);
    cfg.n_grid = vec![50, 100, 200, 400];
    let reports = run_audit(&cfg, &cfg.candidate_list())?;
    println!(
        "{:<10} {:>10} {:>12} {:>10} {:<8} {:<8} {:<8} {:<8} {}",
        "subset", "xi tail", "lambda max", "KL/n", "A1", "A2", "A3", "A4", "label"
    );
    for r in &reports {
        let last = r.n_grid.len() - 1;
        println!(
            "{:<10} {:>10.4} {:>12.4} {:>10.4} {:<8} {:<8} {:<8} {:<8} {}",
            r.subset.to_string(),
            r.xi_tail_min,
            r.lambda_max_a[last],
            r.kl_over_n[last],
            format!("{:?}", r.verdicts.a1),
            format!("{:?}", r.verdicts.a2),
            format!("{:?}", r.verdicts.a3),
            format!("{:?}", r.verdicts.a4),
            audit_label(r)
        );
    }
    Ok(())
}
