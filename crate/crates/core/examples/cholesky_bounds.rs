//! Jittered Cholesky, log-determinants and eigenvalue bounds on a
//! squared-exponential kernel and on the AR(1) precision matrix.
//!
//! ```bash
//! cargo run --release -p gpbf --example cholesky_bounds
//! ```

use gpbf::linalg::{cholesky, extreme_eigs, gerschgorin_bounds, symmetric_eigenvalues, SpdMatrix};
use gpbf::model::{ar1_precision_eigs_approx, ar1_precision_tridiag, se_correlation, Dataset, SubsetMask};
use nalgebra::DMatrix;

fn main() -> gpbf::Result<()> {
    // Closely spaced inputs make the kernel numerically singular.
    let n = 60;
    let x = DMatrix::from_fn(n, 1, |i, _| i as f64 / (10.0 * n as f64));
    let data = Dataset::design_only(x, 1.0)?;
    let k = se_correlation(&data, &SubsetMask::new(vec![1])?, &[4.0])?;
    let f = cholesky(&k)?;
    println!("SE kernel n={n}: jitter {:.1e}", f.jitter);

    let spd = SpdMatrix::new(&k + DMatrix::identity(n, n) * 0.1)?;
    let (lo, hi) = extreme_eigs(spd.matrix())?;
    let (glo, ghi) = gerschgorin_bounds(spd.matrix());
    println!("K + 0.1 I: log|.| = {:.6}", spd.log_det());
    println!("  eigenvalues in [{lo:.4}, {hi:.4}], Gerschgorin discs in [{glo:.4}, {ghi:.4}]");

    println!();
    println!("AR(1) precision, n = 200");
    println!("{:>6} {:>12} {:>12} {:>10}", "rho", "max error", "max bound", "violations");
    for rho in [-0.5, 0.5, 0.9] {
        let n = 200;
        let exact = symmetric_eigenvalues(&ar1_precision_tridiag(n, rho)?.to_dense())?;
        let (approx, bounds) = ar1_precision_eigs_approx(n, rho)?;
        // Pair the k-th approximation with the exact eigenvalue of equal rank.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| approx[i].total_cmp(&approx[j]));
        let (mut err, mut violations) = (0.0f64, 0);
        for (rank, &k) in order.iter().enumerate() {
            let e = (approx[k] - exact[rank]).abs();
            err = err.max(e);
            violations += usize::from(e > bounds[k]);
        }
        let bound = bounds.iter().copied().fold(0.0, f64::max);
        println!("{rho:>6} {err:>12.3e} {bound:>12.3e} {violations:>10}");
    }
    Ok(())
}
