//! Log Bayes factor trajectories for every subset of four covariates under a
//! chosen true model, followed by subset selection.
//!
//! ```bash
//! cargo run --release -p gpbf --example consistency -- linear
//! cargo run --release -p gpbf --example consistency -- ar1 20
//! ```
//!
//! Arguments: family (`linear`, `se` or `ar1`, default `linear`) and an
//! optional replicate count (default 50).

use std::time::Instant;

use gpbf::config::{ExperimentConfig, Family};
use gpbf::sim::{estimate_delta, run_trajectories};

fn main() -> gpbf::Result<()> {
    let mut args = std::env::args().skip(1);
    let family = match args.next().as_deref() {
        None | Some("linear") => Family::Linear,
        Some("se") => Family::Se,
        Some("ar1") => Family::Ar1,
        Some(other) => {
            eprintln!("unknown family `{other}`");
            std::process::exit(2);
        }
    };
    let mut cfg = ExperimentConfig::default_for(family, 2024);
    if let Some(r) = args.next() {
        cfg.replicates = r.parse().expect("replicate count");
    }

    let start = Instant::now();
    let sim = run_trajectories(&cfg)?;
    let last = cfg.n_grid.len() - 1;
    let n = cfg.n_grid[last];

    println!("family {family:?}, s0 = {}, {} replicates", cfg.s0, cfg.replicates);
    println!("{:<11} {:>14} {:>10} {:>10} {:>9}", "subset", "mean logBF/n", "se", "delta_ols", "negative");
    for t in &sim.trajectories {
        let ols = estimate_delta(t).map(|d| d.ols).unwrap_or(f64::NAN);
        println!(
            "{:<11} {:>14.5} {:>10.5} {:>10.5} {:>9.2}",
            t.subset.to_string(),
            t.mean_log_bf(last) / n as f64,
            t.se_log_bf(last) / n as f64,
            ols,
            t.select_fraction
        );
    }
    println!("selected subset: {}", sim.selected()?);
    println!("s0 chosen in {:.0}% of replicates", 100.0 * sim.selection_rate(&cfg.s0));
    if sim.max_nodes_used > 1 {
        println!(
            "quadrature: up to {} nodes, {} cells unconverged",
            sim.max_nodes_used, sim.unconverged_cells
        );
    }
    println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
