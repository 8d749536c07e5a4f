//! Dense symmetric positive-definite linear algebra and log-domain helpers.
//!
//! Everything downstream works with log-determinants and quadratic forms
//! computed from a cached Cholesky factor; densities are never formed
//! outside [`log_sum_exp`].

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Relative jitter levels tried, in order, when a factorization fails.
pub const JITTER_LEVELS: [f64; 5] = [1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

const SYMMETRY_TOL: f64 = 1e-12;

/// Lower-triangular Cholesky factor together with the diagonal jitter that
/// was needed to obtain it (`L·Lᵀ = M + jitter·I`).
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub lower: DMatrix<f64>,
    pub jitter: f64,
}

/// Factorizes a symmetric matrix, escalating diagonal jitter through
/// [`JITTER_LEVELS`] (scaled by the mean diagonal) if needed.
pub fn cholesky(m: &DMatrix<f64>) -> Result<CholeskyFactor> {
    let n = m.nrows();
    check_dim("square matrix columns", n, m.ncols())?;
    if n == 0 {
        return Err(Error::EmptyInput("matrix of dimension 0"));
    }
    if let Some(lower) = blocked_cholesky(m.clone()) {
        return Ok(CholeskyFactor { lower, jitter: 0.0 });
    }
    let mean_diag = m.diagonal().mean();
    let base = if mean_diag.is_finite() && mean_diag > 0.0 {
        mean_diag
    } else {
        1.0
    };
    let mut last = 0.0;
    for eps in JITTER_LEVELS {
        let jitter = eps * base;
        last = jitter;
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(lower) = blocked_cholesky(shifted) {
            return Ok(CholeskyFactor { lower, jitter });
        }
    }
    Err(Error::NotPositiveDefinite {
        dim: n,
        max_jitter: last,
    })
}

const BLOCK: usize = 96;

/// Right-looking blocked Cholesky on the lower triangle; the trailing update
/// is a matrix product. Returns `None` when a pivot is not positive.
fn blocked_cholesky(mut a: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut k = 0;
    while k < n {
        let b = BLOCK.min(n - k);
        let l11 = a.view((k, k), (b, b)).clone_owned().cholesky()?.unpack();
        a.view_mut((k, k), (b, b)).copy_from(&l11);
        let m = n - k - b;
        if m > 0 {
            let a21t = a.view((k + b, k), (m, b)).transpose();
            let l21 = l11.solve_lower_triangular(&a21t)?.transpose();
            a.view_mut((k + b, k + b), (m, m))
                .gemm(-1.0, &l21, &l21.transpose(), 1.0);
            a.view_mut((k + b, k), (m, b)).copy_from(&l21);
        }
        k += b;
    }
    a.fill_upper_triangle(0.0, 1);
    if a.diagonal().iter().all(|d| d.is_finite() && *d > 0.0) {
        Some(a)
    } else {
        None
    }
}

/// A symmetric positive-definite matrix with its Cholesky factor cached at
/// construction. Immutable afterwards.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    matrix: DMatrix<f64>,
    factor: CholeskyFactor,
}

impl SpdMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&matrix)?;
        let factor = cholesky(&matrix)?;
        Ok(SpdMatrix { matrix, factor })
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        assert!(scale > 0.0, "scaled_identity needs a positive scale");
        SpdMatrix {
            matrix: DMatrix::identity(n, n) * scale,
            factor: CholeskyFactor {
                lower: DMatrix::identity(n, n) * scale.sqrt(),
                jitter: 0.0,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower-triangular `L` with `L·Lᵀ = M + jitter·I`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor.lower
    }

    pub fn jitter(&self) -> f64 {
        self.factor.jitter
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.factor.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// `L⁻¹·v` by forward substitution.
    pub fn whiten(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("vector length", self.dim(), v.len())?;
        Ok(self
            .factor
            .lower
            .solve_lower_triangular(v)
            .expect("cholesky factor has a positive diagonal"))
    }

    /// `L⁻¹·B` column by column.
    pub fn whiten_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim("matrix rows", self.dim(), b.nrows())?;
        Ok(self
            .factor
            .lower
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal"))
    }

    /// `vᵀ·M⁻¹·v` via one triangular solve.
    pub fn quad_form(&self, v: &DVector<f64>) -> Result<f64> {
        let w = self.whiten(v)?;
        Ok(w.norm_squared())
    }

    pub fn solve(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let w = self.whiten(v)?;
        Ok(self
            .factor
            .lower
            .tr_solve_lower_triangular(&w)
            .expect("cholesky factor has a positive diagonal"))
    }
}

pub fn log_det_spd(m: &SpdMatrix) -> f64 {
    m.log_det()
}

pub fn quad_form(m: &SpdMatrix, v: &DVector<f64>) -> Result<f64> {
    m.quad_form(v)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    check_dim("square matrix columns", n, m.ncols())?;
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    for j in 0..n {
        for i in (j + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidInput(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Gerschgorin enclosure `(min_i (m_ii − R_i), max_i (m_ii + R_i))` where
/// `R_i` is the off-diagonal absolute row sum.
pub fn gerschgorin_bounds(m: &DMatrix<f64>) -> (f64, f64) {
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for i in 0..m.nrows() {
        let radius: f64 = (0..m.ncols())
            .filter(|&j| j != i)
            .map(|j| m[(i, j)].abs())
            .sum();
        lower = lower.min(m[(i, i)] - radius);
        upper = upper.max(m[(i, i)] + radius);
    }
    (lower, upper)
}

/// All eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_dim("square matrix columns", m.nrows(), m.ncols())?;
    if m.nrows() == 0 {
        return Err(Error::EmptyInput("matrix of dimension 0"));
    }
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure(
            "non-finite eigenvalue from symmetric QR iteration".into(),
        ));
    }
    values.sort_by(f64::total_cmp);
    Ok(DVector::from_vec(values))
}

/// `(λ_min, λ_max)` from a full symmetric eigendecomposition.
pub fn extreme_eigs(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let values = symmetric_eigenvalues(m)?;
    Ok((values[0], values[values.len() - 1]))
}

/// `log Σ wᵢ·exp(vᵢ)` with the largest finite value factored out.
///
/// Values may be `-∞` (zero mass) as long as one is finite.
pub fn log_sum_exp(values: &[f64], weights: &[f64]) -> Result<f64> {
    check_dim("log_sum_exp weights", values.len(), weights.len())?;
    if values.is_empty() {
        return Err(Error::EmptyInput("log_sum_exp of no terms"));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "log_sum_exp weight {w} is not positive"
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("log_sum_exp value is NaN".into()));
    }
    if values.iter().any(|v| *v == f64::INFINITY) {
        return Ok(f64::INFINITY);
    }
    let max = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptyInput("log_sum_exp has no finite value"));
    }
    let sum: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - max).exp())
        .sum();
    Ok(max + sum.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        g.transpose() * &g + DMatrix::identity(n, n)
    }

    #[test]
    fn cholesky_identity() {
        let f = cholesky(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(f.lower, DMatrix::identity(2, 2));
        assert_eq!(f.jitter, 0.0);
    }

    #[test]
    fn blocked_matches_unblocked() {
        for n in [1, BLOCK - 1, BLOCK, 2 * BLOCK + 7] {
            let m = random_spd(n, n as u64);
            let f = cholesky(&m).unwrap();
            let reference = m.clone().cholesky().unwrap().unpack();
            assert!(max_abs(&(&f.lower - reference)) <= 1e-9 * max_abs(&m));
        }
        let mut bad = random_spd(2 * BLOCK, 3);
        bad[(BLOCK + 5, BLOCK + 5)] = -1e6;
        assert!(blocked_cholesky(bad).is_none());
    }

    #[test]
    fn cholesky_two_by_two_by_hand() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let f = cholesky(&m).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2f64.sqrt()]);
        assert_relative_eq!(f.lower, expected, epsilon = 1e-15);
        assert_relative_eq!(&f.lower * f.lower.transpose(), m, epsilon = 1e-14);
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let m = random_spd(50, 1);
        let spd = SpdMatrix::new(m.clone()).unwrap();
        let err = max_abs(&(spd.factor() * spd.factor().transpose() - &m));
        assert!(err <= 1e-8 * max_abs(&m), "reconstruction error {err}");
    }

    #[test]
    fn jitter_rescues_duplicate_rows() {
        // rank-one kernel-like matrix: singular without jitter
        let v = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let m = &v * v.transpose();
        let spd = SpdMatrix::new(m).unwrap();
        assert!(spd.jitter() > 0.0);
        assert!(spd.jitter() <= 1e-8);
    }

    #[test]
    fn not_positive_definite_is_reported() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            SpdMatrix::new(m),
            Err(Error::NotPositiveDefinite { dim: 2, .. })
        ));
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(SpdMatrix::new(m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn log_det_cases() {
        assert_eq!(SpdMatrix::identity(4).log_det(), 0.0);
        let d = SpdMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 8.0])))
            .unwrap();
        assert_relative_eq!(d.log_det(), 16f64.ln(), epsilon = 1e-14);

        let m = random_spd(30, 2);
        let oracle: f64 = m.clone().symmetric_eigenvalues().iter().map(|l| l.ln()).sum();
        let spd = SpdMatrix::new(m).unwrap();
        assert_relative_eq!(log_det_spd(&spd), oracle, epsilon = 1e-8);
    }

    #[test]
    fn quad_form_cases() {
        let id = SpdMatrix::identity(2);
        assert_eq!(quad_form(&id, &DVector::zeros(2)).unwrap(), 0.0);
        assert_eq!(
            quad_form(&id, &DVector::from_vec(vec![3.0, 4.0])).unwrap(),
            25.0
        );

        let m = random_spd(20, 3);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let v = DVector::from_fn(20, |_, _| rng.random_range(-2.0..2.0));
        let oracle = (v.transpose() * m.clone().try_inverse().unwrap() * &v)[(0, 0)];
        let spd = SpdMatrix::new(m).unwrap();
        assert_relative_eq!(quad_form(&spd, &v).unwrap(), oracle, max_relative = 1e-8);
    }

    #[test]
    fn quad_form_dimension_mismatch() {
        let id = SpdMatrix::identity(3);
        assert!(matches!(
            id.quad_form(&DVector::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn solve_inverts() {
        let m = random_spd(10, 5);
        let spd = SpdMatrix::new(m.clone()).unwrap();
        let b = DVector::from_fn(10, |i, _| i as f64);
        let x = spd.solve(&b).unwrap();
        assert_relative_eq!(&m * x, b, epsilon = 1e-10);
    }

    fn equicorrelation(n: usize, rho: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho })
    }

    #[test]
    fn gerschgorin_cases() {
        assert_eq!(gerschgorin_bounds(&DMatrix::identity(3, 3)), (1.0, 1.0));
        let (lo, hi) = gerschgorin_bounds(&equicorrelation(3, 0.5));
        assert_relative_eq!(lo, 0.0);
        assert_relative_eq!(hi, 2.0);
    }

    #[test]
    fn gerschgorin_encloses_se_kernel_spectrum() {
        let x: Vec<f64> = (0..10).map(|i| 1.5 * i as f64).collect();
        let k = DMatrix::from_fn(10, 10, |i, j| (-0.5 * (x[i] - x[j]).powi(2)).exp());
        let (_, hi) = gerschgorin_bounds(&k);
        let (_, lmax) = extreme_eigs(&k).unwrap();
        assert!(hi >= lmax);
    }

    #[test]
    fn extreme_eigs_cases() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 3.0]));
        let (lo, hi) = extreme_eigs(&d).unwrap();
        assert_relative_eq!(lo, 1.0, epsilon = 1e-14);
        assert_relative_eq!(hi, 3.0, epsilon = 1e-14);

        let (lo, hi) = extreme_eigs(&equicorrelation(10, 0.3)).unwrap();
        assert_relative_eq!(lo, 0.7, max_relative = 1e-8);
        assert_relative_eq!(hi, 3.7, max_relative = 1e-8);
    }

    #[test]
    fn extreme_eigs_within_gerschgorin_for_large_kernel() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let x: Vec<f64> = (0..100).map(|_| rng.random_range(-3.0..3.0)).collect();
        let k = DMatrix::from_fn(100, 100, |i, j| {
            (-0.5 * (x[i] - x[j]).powi(2)).exp() + if i == j { 1.0 } else { 0.0 }
        });
        let (glo, ghi) = gerschgorin_bounds(&k);
        let (lo, hi) = extreme_eigs(&k).unwrap();
        assert!(glo <= lo && hi <= ghi);
    }

    #[test]
    fn log_sum_exp_cases() {
        assert_eq!(log_sum_exp(&[0.0], &[1.0]).unwrap(), 0.0);
        assert_relative_eq!(
            log_sum_exp(&[2f64.ln(), 3f64.ln()], &[1.0, 1.0]).unwrap(),
            5f64.ln(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            log_sum_exp(&[1000.0, 1000.0], &[0.5, 0.5]).unwrap(),
            1000.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            log_sum_exp(&[-1e6, -1e6 + 1.0], &[1.0, 1.0]).unwrap(),
            -1e6 + 1.0 + (1.0 + (-1f64).exp()).ln(),
            epsilon = 1e-9
        );
        assert_relative_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, 0.0], &[1.0, 2.0]).unwrap(),
            2f64.ln()
        );
    }

    #[test]
    fn log_sum_exp_errors() {
        assert!(matches!(log_sum_exp(&[], &[]), Err(Error::EmptyInput(_))));
        assert!(matches!(
            log_sum_exp(&[f64::NEG_INFINITY], &[1.0]),
            Err(Error::EmptyInput(_))
        ));
        assert!(log_sum_exp(&[0.0], &[0.0]).is_err());
        assert!(log_sum_exp(&[0.0, 1.0], &[1.0]).is_err());
    }
}
