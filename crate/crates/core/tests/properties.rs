use gpbf::audit::{a4_rowsum, delta_ns, kl_per_n, lambda_max_a};
use gpbf::cli::parse_subset;
use gpbf::config::{ExperimentConfig, Family};
use gpbf::linalg::{cholesky, extreme_eigs, gerschgorin_bounds, log_sum_exp, max_abs, symmetric_eigenvalues, SpdMatrix};
use gpbf::marginal::{log_bf_known_var, whitened_form, GaussianMarginal};
use gpbf::model::{
    ar1_error_cov, ar1_precision_tridiag, build_ar1_zellner, build_linear_zellner, build_se_gp, projection,
    se_correlation, Ar1Spec, Dataset, LinearZellnerSpec, MeanFn, SeKernelSpec, SubsetMask,
};
use gpbf::sim::{generate_covariates, replicate_streams, sample_true};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn random_sym(n: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&g + g.transpose()) * 0.5
}

fn random_spd(n: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    g.transpose() * &g + DMatrix::identity(n, n) * 0.05
}

fn design(n: usize, p: usize, seed: u64) -> Dataset {
    let (mut rng, _) = replicate_streams(seed, 0);
    Dataset::design_only(generate_covariates(&mut rng, n, p, 1.0), 1.0).unwrap()
}

fn subset_strategy(p: usize) -> impl Strategy<Value = SubsetMask> {
    proptest::collection::btree_set(1..=p, 0..=p).prop_map(|s| SubsetMask::new(s.into_iter().collect()).unwrap())
}

fn lin_spec() -> LinearZellnerSpec {
    LinearZellnerSpec {
        beta0: vec![1.0, -0.8, 0.6, -0.5],
        sigma_beta_sq: 1.0,
        g: 1.5,
        sigma_eps_sq: 0.7,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quad_form_is_nonnegative(seed in any::<u64>(), n in 1usize..12, zero in any::<bool>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let m = SpdMatrix::new(random_spd(n, &mut rng)).unwrap();
        let v = if zero { DVector::zeros(n) } else { DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)) };
        let q = m.quad_form(&v).unwrap();
        prop_assert!(q >= 0.0);
        prop_assert_eq!(q == 0.0, v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn cholesky_reconstructs(seed in any::<u64>(), n in 1usize..120) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let m = random_spd(n, &mut rng);
        let f = cholesky(&m).unwrap();
        prop_assert!(max_abs(&(&f.lower * f.lower.transpose() - &m)) <= 1e-8 * max_abs(&m));
    }

    #[test]
    fn gerschgorin_encloses_spectrum(seed in any::<u64>(), n in 1usize..15) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let m = random_sym(n, &mut rng);
        let (lo, hi) = extreme_eigs(&m).unwrap();
        let (glo, ghi) = gerschgorin_bounds(&m);
        prop_assert!(glo <= lo + 1e-12 && hi <= ghi + 1e-12);
    }

    #[test]
    fn weyl_sum_bounds(seed in any::<u64>(), n in 1usize..15) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let a1 = random_sym(n, &mut rng);
        let a2 = random_sym(n, &mut rng);
        let (l1, h1) = extreme_eigs(&a1).unwrap();
        let (l2, h2) = extreme_eigs(&a2).unwrap();
        let (l, h) = extreme_eigs(&(&a1 + &a2)).unwrap();
        prop_assert!(l1 + l2 <= l + 1e-10);
        prop_assert!(h <= h1 + h2 + 1e-10);
    }

    #[test]
    fn product_spectral_bound(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let g = random_spd(n, &mut rng);
        let h = random_spd(n, &mut rng);
        let eig = h.clone().symmetric_eigen();
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let similar = &root * &g * &root;
        let (_, top) = extreme_eigs(&((&similar + similar.transpose()) * 0.5)).unwrap();
        let (_, tg) = extreme_eigs(&g).unwrap();
        let (_, th) = extreme_eigs(&h).unwrap();
        prop_assert!(top <= tg * th * (1.0 + 1e-10));
    }

    #[test]
    fn log_sum_exp_is_shift_equivariant(vals in proptest::collection::vec(-50.0f64..50.0, 1..10), shift in -500.0f64..500.0) {
        let w = vec![1.0; vals.len()];
        let shifted: Vec<f64> = vals.iter().map(|v| v + shift).collect();
        let a = log_sum_exp(&vals, &w).unwrap();
        let b = log_sum_exp(&shifted, &w).unwrap();
        prop_assert!((b - a - shift).abs() <= 1e-9 * (1.0 + shift.abs()));
    }

    #[test]
    fn zellner_moments_are_well_formed(s in subset_strategy(4), seed in 0u64..1000, n in 8usize..40) {
        let data = design(n, 4, seed);
        let m = build_linear_zellner(&data, &s, &lin_spec()).unwrap();
        let eig = symmetric_eigenvalues(&m.sigma).unwrap();
        prop_assert!(eig.iter().all(|v| *v >= -1e-10));
        prop_assert!(m.noise_cov.log_det().is_finite());
        if !s.is_empty() {
            let p = projection(&data.columns(&s).unwrap(), &s).unwrap();
            prop_assert!(max_abs(&(&p * &p - &p)) <= 1e-8);
        }
    }

    #[test]
    fn ar1_covariance_inverts_tridiagonal(rho in -0.95f64..0.95, n in 1usize..40, sigma2 in 0.1f64..5.0) {
        let cov = ar1_error_cov(n, rho, sigma2).unwrap();
        let t = ar1_precision_tridiag(n, rho).unwrap().to_dense();
        let prod = cov.matrix() * t;
        prop_assert!(max_abs(&(prod - DMatrix::identity(n, n) * sigma2)) <= 1e-8 * sigma2.max(1.0));
    }

    #[test]
    fn divergences_are_nonnegative(s in subset_strategy(4), t in subset_strategy(4), seed in 0u64..1000) {
        let data = design(25, 4, seed);
        let spec = lin_spec();
        let cand = build_linear_zellner(&data, &s, &spec).unwrap();
        let truth = build_linear_zellner(&data, &t, &spec).unwrap();
        let d = delta_ns(&cand, &truth).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d == 0.0, cand.mu == truth.mu);
        prop_assert!(kl_per_n(&cand, &truth).unwrap() >= -1e-10);
        let c = whitened_form(&cand.marginal_spd().unwrap(), &truth.marginal_spd().unwrap()).unwrap();
        prop_assert!(c.trace() - c.log_det() - 25.0 >= -1e-8);
        let bound = 1.0 + spec.prior_scale() / spec.sigma_eps_sq;
        prop_assert!(lambda_max_a(&cand, &truth).unwrap() <= bound * (1.0 + 1e-10));
    }

    #[test]
    fn self_bayes_factor_is_exactly_zero(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let m = GaussianMarginal::new(
            DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
            SpdMatrix::new(random_spd(n, &mut rng)).unwrap(),
        ).unwrap();
        let y = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        prop_assert_eq!(log_bf_known_var(&y, &m, &m).unwrap().to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn subset_labels_round_trip(s in subset_strategy(16)) {
        prop_assert_eq!(parse_subset(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn config_serialization_is_idempotent(seed in any::<u64>(), reps in 1usize..100, rho in -0.85f64..0.85, p in 1usize..6) {
        let doc = serde_json::json!({
            "family": "ar1", "p": p, "s0": [1], "seed": seed, "replicates": reps, "ar1": {"rho": rho}
        });
        let cfg = ExperimentConfig::from_json_str(&doc.to_string()).unwrap();
        let once = cfg.to_json_string();
        let again = ExperimentConfig::from_json_str(&once).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.to_json_string(), once);
    }
}

#[test]
fn cholesky_reconstructs_at_n_500() {
    let mut rng = ChaCha20Rng::seed_from_u64(500);
    let m = random_spd(500, &mut rng);
    let f = cholesky(&m).unwrap();
    assert!(max_abs(&(&f.lower * f.lower.transpose() - &m)) <= 1e-8 * max_abs(&m));
}

#[test]
fn expected_log_bf_is_nonpositive_under_the_truth() {
    let data = design(40, 4, 3);
    let spec = lin_spec();
    let s0 = SubsetMask::new(vec![1, 2]).unwrap();
    let truth_m = build_linear_zellner(&data, &s0, &spec).unwrap();
    let truth = GaussianMarginal::from_moments(&truth_m).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    let ys: Vec<DVector<f64>> = (0..200).map(|_| sample_true(&truth_m, &mut rng).unwrap()).collect();
    for s in SubsetMask::all(4) {
        let cand = GaussianMarginal::from_moments(&build_linear_zellner(&data, &s, &spec).unwrap()).unwrap();
        let v: Vec<f64> = ys.iter().map(|y| log_bf_known_var(y, &cand, &truth).unwrap()).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt();
        assert!(mean <= 3.0 * sd / (v.len() as f64).sqrt(), "{s}: mean {mean}");
    }
}

#[test]
fn se_rowsum_on_a_separated_grid_is_stable() {
    let grid = |n: usize| {
        let x = DMatrix::from_fn(n, 1, |i, _| i as f64);
        Dataset::design_only(x, n as f64).unwrap()
    };
    let s = SubsetMask::new(vec![1]).unwrap();
    let k100 = a4_rowsum(&se_correlation(&grid(100), &s, &[1.0]).unwrap()).unwrap();
    let k200 = a4_rowsum(&se_correlation(&grid(200), &s, &[1.0]).unwrap()).unwrap();
    assert!(k100.is_finite() && k100 > 0.0);
    assert!((k200 - k100).abs() <= 0.05 * k100);
}

#[test]
fn se_lambda_max_respects_the_separated_design_bound() {
    let n = 120;
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { i as f64 } else { ((i * 7) % 11) as f64 });
    let data = Dataset::design_only(x, n as f64).unwrap();
    let spec = SeKernelSpec {
        sigma_f_sq: 1.0,
        precision: vec![1.0, 1.0],
        mean: MeanFn::Constant { value: 0.3 },
        sigma_eps_sq: 0.8,
    };
    let s0 = SubsetMask::new(vec![1, 2]).unwrap();
    let truth = build_se_gp(&data, &s0, &spec).unwrap();
    let k = a4_rowsum(&se_correlation(&data, &s0, &spec.precision).unwrap()).unwrap();
    let bound = (spec.sigma_eps_sq + k + 1.0) / spec.sigma_eps_sq;
    for s in SubsetMask::all(2) {
        let cand = build_se_gp(&data, &s, &spec).unwrap();
        assert!(lambda_max_a(&cand, &truth).unwrap() <= bound, "{s}");
    }
}

#[test]
fn ar1_moments_are_well_formed() {
    let data = design(30, 3, 4);
    for rho in [-0.8, 0.0, 0.6] {
        let spec = Ar1Spec {
            rho,
            gamma: 0.1,
            beta0: vec![1.0, 0.5, -0.5],
            sigma_beta_sq: 1.0,
            g: 1.0,
            sigma_eps_sq: 1.2,
        };
        for s in SubsetMask::all(3) {
            let m = build_ar1_zellner(&data, &s, &spec).unwrap();
            assert!(symmetric_eigenvalues(&m.sigma).unwrap().iter().all(|v| *v >= -1e-10));
            assert!((m.sigma.trace() - s.len() as f64).abs() <= 1e-8);
        }
    }
    let cfg = ExperimentConfig::default_for(Family::Ar1, 1);
    assert!(cfg.ar1.spec().validate(4).is_ok());
}
