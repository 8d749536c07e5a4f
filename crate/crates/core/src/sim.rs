//! Simulation harness: synthetic data from the true model, log Bayes factor
//! trajectories along an n-grid, decay-rate estimates, subset selection and
//! the misspecified comparison among wrong subsets.
//!
//! # Random streams
//!
//! Every replicate `r` draws from two ChaCha20 streams (`rand_chacha`),
//! both keyed by `ChaCha20Rng::seed_from_u64(seed)`: stream `2r` produces
//! the covariates row by row as `Uniform(-B, B)`, stream `2r + 1` produces
//! standard normal innovations (`rand_distr::StandardNormal`). Sample sizes
//! only consume prefixes of these streams, so a value computed at one `n`
//! does not depend on the rest of the grid.
//!
//! For each `n` the response is `y_n = μ_n + L_n·z_{1:n}` where `L_n` is the
//! Cholesky factor of the true marginal covariance at `n`. For the
//! squared-exponential family the covariance at `n` is the leading block of
//! the one at `n_max`, so `y_n` is literally a prefix of `y_{n_max}`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::audit::{audit, AuditReport};
use crate::config::{ExperimentConfig, Family, VarianceMode};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, SpdMatrix};
use crate::marginal::zellner::ZellnerStats;
use crate::marginal::{MarginalParts, WhitenedForm};
use crate::model::{Dataset, ModelMoments, ModelSpec, SubsetMask};
use crate::quadrature::refine_log_integrals;

/// The two random streams of replicate `r`.
pub fn replicate_streams(seed: u64, r: u64) -> (ChaCha20Rng, ChaCha20Rng) {
    let mut cov = ChaCha20Rng::seed_from_u64(seed);
    cov.set_stream(2 * r);
    let mut noise = ChaCha20Rng::seed_from_u64(seed);
    noise.set_stream(2 * r + 1);
    (cov, noise)
}

/// `n×p` covariates, i.i.d. uniform on `[-bound, bound]`, filled row-wise.
pub fn generate_covariates<R: Rng>(rng: &mut R, n: usize, p: usize, bound: f64) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] = rng.random_range(-bound..bound);
        }
    }
    x
}

pub fn standard_normals<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// `μ + L·z` with `L` the Cholesky factor of the marginal covariance.
pub fn sample_with_innovations(truth: &ModelMoments, z: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim("innovation length", truth.n(), z.len())?;
    let k = truth.marginal_spd()?;
    Ok(&truth.mu + k.factor() * z)
}

/// One draw `y ~ N(μ, noise_cov + Σ)`.
pub fn sample_true<R: Rng>(truth: &ModelMoments, rng: &mut R) -> Result<DVector<f64>> {
    let z = standard_normals(rng, truth.n());
    sample_with_innovations(truth, &z)
}

/// How a set of marginal parts becomes a log marginal likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Likelihood {
    Gaussian,
    StudentT { alpha: f64, beta: f64 },
}

impl Likelihood {
    fn from_mode(mode: &VarianceMode) -> Self {
        match *mode {
            VarianceMode::Known => Likelihood::Gaussian,
            VarianceMode::InverseGamma { alpha, beta, .. } => Likelihood::StudentT { alpha, beta },
        }
    }

    /// Log marginal from parts of the full covariance `K`; in t mode the
    /// scale is `K/σ²_ε`.
    fn eval(&self, parts: MarginalParts, sigma_eps_sq: f64) -> f64 {
        match *self {
            Likelihood::Gaussian => parts.gaussian(),
            Likelihood::StudentT { alpha, beta } => MarginalParts {
                n: parts.n,
                log_det: parts.log_det - parts.n as f64 * sigma_eps_sq.ln(),
                quad: parts.quad * sigma_eps_sq,
            }
            .student_t(alpha, beta),
        }
    }
}

/// Raw per-replicate output: log (integrated) marginals of every candidate
/// and of the true model at every grid size.
#[derive(Debug, Clone)]
struct ReplicateOutput {
    /// `[n][candidate]`.
    log_marginal: Vec<Vec<f64>>,
    /// `[n]`.
    truth_log_marginal: Vec<f64>,
    /// Quadrature nodes used at each `n` (1 for a fixed hyperparameter).
    nodes: Vec<usize>,
    converged: Vec<bool>,
}

/// Log Bayes factor paths of one candidate across `n_grid` and replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BFTrajectory {
    pub subset: SubsetMask,
    pub n_grid: Vec<usize>,
    /// `log BF_{s,s0}` indexed `[n][replicate]`.
    pub log_bf: Vec<Vec<f64>>,
    /// Tail estimate of the decay rate.
    pub delta_hat: f64,
    /// Fraction of replicates with `log BF < 0` at the largest `n`.
    pub select_fraction: f64,
}

impl BFTrajectory {
    pub fn new(subset: SubsetMask, n_grid: Vec<usize>, log_bf: Vec<Vec<f64>>) -> Result<Self> {
        if n_grid.is_empty() {
            return Err(Error::EmptyInput("trajectory n-grid"));
        }
        check_dim("trajectory rows", n_grid.len(), log_bf.len())?;
        let reps = log_bf[0].len();
        if reps == 0 {
            return Err(Error::EmptyInput("trajectory replicates"));
        }
        for row in &log_bf {
            check_dim("trajectory replicates", reps, row.len())?;
        }
        let last = log_bf.last().expect("nonempty");
        let n_last = *n_grid.last().expect("nonempty") as f64;
        let delta_hat = -mean(last) / n_last;
        let select_fraction = last.iter().filter(|v| **v < 0.0).count() as f64 / reps as f64;
        Ok(BFTrajectory {
            subset,
            n_grid,
            log_bf,
            delta_hat,
            select_fraction,
        })
    }

    pub fn replicates(&self) -> usize {
        self.log_bf[0].len()
    }

    pub fn log_bf_over_n(&self, i: usize, r: usize) -> f64 {
        self.log_bf[i][r] / self.n_grid[i] as f64
    }

    /// Replicate mean of `log BF` at grid index `i`.
    pub fn mean_log_bf(&self, i: usize) -> f64 {
        mean(&self.log_bf[i])
    }

    /// Monte Carlo standard error of [`mean_log_bf`](Self::mean_log_bf).
    pub fn se_log_bf(&self, i: usize) -> f64 {
        std_error(&self.log_bf[i])
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_error(v: &[f64]) -> f64 {
    let k = v.len();
    if k < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1) as f64;
    (var / k as f64).sqrt()
}

/// Decay-rate estimates for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaEstimate {
    /// `−mean(log BF/n)` at the largest `n`.
    pub tail: f64,
    /// `−slope` of an ordinary least-squares fit of mean `log BF` on `n`.
    pub ols: f64,
}

pub fn estimate_delta(traj: &BFTrajectory) -> Result<DeltaEstimate> {
    let k = traj.n_grid.len();
    if k < 2 {
        return Err(Error::InsufficientGrid(k));
    }
    let xs: Vec<f64> = traj.n_grid.iter().map(|n| *n as f64).collect();
    let ys: Vec<f64> = (0..k).map(|i| traj.mean_log_bf(i)).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(DeltaEstimate {
        tail: traj.delta_hat,
        ols: -sxy / sxx,
    })
}

/// Orders by larger value, then smaller subset, then lexicographic indices.
fn better(a: (f64, &SubsetMask), b: (f64, &SubsetMask)) -> bool {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => (a.1.len(), a.1.indices()) < (b.1.len(), b.1.indices()),
    }
}

fn argbest<'a>(items: impl Iterator<Item = (f64, &'a SubsetMask)>) -> Option<&'a SubsetMask> {
    let mut best: Option<(f64, &SubsetMask)> = None;
    for item in items {
        if best.is_none_or(|b| better(item, b)) {
            best = Some(item);
        }
    }
    best.map(|b| b.1)
}

/// The subset with the smallest `delta_hat`; ties go to the smaller subset,
/// then to the lexicographically smaller one.
pub fn select_subset(trajs: &[BFTrajectory]) -> Result<SubsetMask> {
    argbest(trajs.iter().map(|t| (-t.delta_hat, &t.subset)))
        .cloned()
        .ok_or(Error::EmptyInput("no trajectories to select from"))
}

/// Everything produced by [`run_trajectories`].
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub candidates: Vec<SubsetMask>,
    pub s0: SubsetMask,
    pub n_grid: Vec<usize>,
    pub trajectories: Vec<BFTrajectory>,
    /// Log (integrated) marginal of each candidate, `[replicate][n][candidate]`.
    pub log_marginal: Vec<Vec<Vec<f64>>>,
    /// Log marginal of the true model, `[replicate][n]`.
    pub truth_log_marginal: Vec<Vec<f64>>,
    /// Subset chosen in each replicate at the largest `n`.
    pub replicate_selection: Vec<SubsetMask>,
    /// Largest quadrature node count used anywhere (1 without integration).
    pub max_nodes_used: usize,
    /// Number of `(replicate, n)` cells whose refinement hit the node cap.
    pub unconverged_cells: usize,
}

impl SimulationResult {
    pub fn selected(&self) -> Result<SubsetMask> {
        select_subset(&self.trajectories)
    }

    /// Fraction of replicates selecting `s`.
    pub fn selection_rate(&self, s: &SubsetMask) -> f64 {
        self.replicate_selection.iter().filter(|x| *x == s).count() as f64
            / self.replicate_selection.len() as f64
    }

    pub fn trajectory(&self, s: &SubsetMask) -> Option<&BFTrajectory> {
        self.trajectories.iter().find(|t| &t.subset == s)
    }
}

/// Per-family evaluation plan shared by all replicates.
struct Plan<'a> {
    cfg: &'a ExperimentConfig,
    spec: ModelSpec,
    candidates: Vec<SubsetMask>,
    likelihood: Likelihood,
    sigma_eps_sq: f64,
    n_max: usize,
}

pub fn run_trajectories(cfg: &ExperimentConfig) -> Result<SimulationResult> {
    run_with_candidates(cfg, cfg.candidate_list())
}

fn run_with_candidates(cfg: &ExperimentConfig, candidates: Vec<SubsetMask>) -> Result<SimulationResult> {
    cfg.validate()?;
    if candidates.is_empty() {
        return Err(Error::validation("candidates", "must be nonempty"));
    }
    let spec = cfg.model_spec();
    let plan = Plan {
        cfg,
        sigma_eps_sq: spec.sigma_eps_sq(),
        spec,
        candidates,
        likelihood: Likelihood::from_mode(&cfg.variance_mode),
        n_max: *cfg.n_grid.last().expect("validated nonempty"),
    };
    let outputs: Vec<ReplicateOutput> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| plan.replicate(r))
        .collect::<Result<_>>()?;
    assemble(&plan, outputs)
}

fn assemble(plan: &Plan, outputs: Vec<ReplicateOutput>) -> Result<SimulationResult> {
    let cfg = plan.cfg;
    let k = cfg.n_grid.len();
    let mut trajectories = Vec::with_capacity(plan.candidates.len());
    for (c, s) in plan.candidates.iter().enumerate() {
        let log_bf: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                outputs
                    .iter()
                    .map(|o| o.log_marginal[i][c] - o.truth_log_marginal[i])
                    .collect()
            })
            .collect();
        trajectories.push(BFTrajectory::new(s.clone(), cfg.n_grid.clone(), log_bf)?);
    }
    let replicate_selection = outputs
        .iter()
        .map(|o| {
            argbest(o.log_marginal[k - 1].iter().copied().zip(plan.candidates.iter()))
                .cloned()
                .expect("nonempty candidates")
        })
        .collect();
    Ok(SimulationResult {
        candidates: plan.candidates.clone(),
        s0: cfg.s0.clone(),
        n_grid: cfg.n_grid.clone(),
        trajectories,
        max_nodes_used: outputs
            .iter()
            .flat_map(|o| o.nodes.iter().copied())
            .max()
            .unwrap_or(1),
        unconverged_cells: outputs
            .iter()
            .map(|o| o.converged.iter().filter(|c| !**c).count())
            .sum(),
        log_marginal: outputs.iter().map(|o| o.log_marginal.clone()).collect(),
        truth_log_marginal: outputs.into_iter().map(|o| o.truth_log_marginal).collect(),
        replicate_selection,
    })
}

impl Plan<'_> {
    fn replicate(&self, r: u64) -> Result<ReplicateOutput> {
        let cfg = self.cfg;
        let (mut cov_rng, mut noise_rng) = replicate_streams(cfg.seed, r);
        let x = generate_covariates(&mut cov_rng, self.n_max, cfg.p, cfg.covariate_bound);
        let z = standard_normals(&mut noise_rng, self.n_max);
        let data = Dataset::design_only(x, cfg.covariate_bound)?;
        match &self.spec {
            ModelSpec::Se(_) => self.replicate_dense_prefix(&data, &z),
            _ => self.replicate_zellner(&data, &z),
        }
    }

    /// SE family: one factorization per candidate at `n_max`, read off at
    /// every prefix.
    fn replicate_dense_prefix(&self, data: &Dataset, z: &DVector<f64>) -> Result<ReplicateOutput> {
        let s0 = &self.cfg.s0;
        let truth = self.spec.build(data, s0)?;
        let truth_cov = truth.marginal_spd()?;
        let y = &truth.mu + truth_cov.factor() * z;
        let prefix_values = |m: &ModelMoments, cov: &SpdMatrix| -> Result<Vec<f64>> {
            let w = cov.whiten(&(&y - &m.mu))?;
            let diag = cov.factor().diagonal();
            let mut out = Vec::with_capacity(self.cfg.n_grid.len());
            let (mut log_det, mut quad, mut i) = (0.0, 0.0, 0);
            for &n in &self.cfg.n_grid {
                while i < n {
                    log_det += 2.0 * diag[i].ln();
                    quad += w[i] * w[i];
                    i += 1;
                }
                let parts = MarginalParts { n, log_det, quad };
                out.push(self.likelihood.eval(parts, self.sigma_eps_sq));
            }
            Ok(out)
        };
        let truth_values = prefix_values(&truth, &truth_cov)?;
        let mut per_candidate = Vec::with_capacity(self.candidates.len());
        for s in &self.candidates {
            if s == s0 {
                per_candidate.push(prefix_values(&truth, &truth_cov)?);
            } else {
                let m = self.spec.build(data, s)?;
                let cov = m.marginal_spd()?;
                per_candidate.push(prefix_values(&m, &cov)?);
            }
        }
        let k = self.cfg.n_grid.len();
        Ok(ReplicateOutput {
            log_marginal: (0..k)
                .map(|i| per_candidate.iter().map(|v| v[i]).collect())
                .collect(),
            truth_log_marginal: truth_values,
            nodes: vec![1; k],
            converged: vec![true; k],
        })
    }

    /// Zellner families: exact truth draw at each `n`, candidates through
    /// sufficient statistics (integrated over ρ when configured).
    fn replicate_zellner(&self, data: &Dataset, z: &DVector<f64>) -> Result<ReplicateOutput> {
        let cfg = self.cfg;
        let (beta0, sigma_beta_sq, g, rho0) = match &self.spec {
            ModelSpec::Linear(s) => (&s.beta0, s.sigma_beta_sq, s.g, 0.0),
            ModelSpec::Ar1(s) => (&s.beta0, s.sigma_beta_sq, s.g, s.rho),
            ModelSpec::Se(_) => unreachable!("dense path"),
        };
        let (noise_var, prior_scale) = match self.likelihood {
            Likelihood::Gaussian => (self.sigma_eps_sq, sigma_beta_sq * g),
            Likelihood::StudentT { .. } => (1.0, sigma_beta_sq * g / self.sigma_eps_sq),
        };
        let finish = |parts: MarginalParts| match self.likelihood {
            Likelihood::Gaussian => parts.gaussian(),
            Likelihood::StudentT { alpha, beta } => parts.student_t(alpha, beta),
        };
        let betas: Vec<DVector<f64>> = self
            .candidates
            .iter()
            .map(|s| s.restrict(beta0))
            .collect::<Result<_>>()?;
        let beta_s0 = cfg.s0.restrict(beta0)?;
        let integrate = cfg.family == Family::Ar1 && cfg.ar1.integrate_rho;

        let k = cfg.n_grid.len();
        let mut out = ReplicateOutput {
            log_marginal: Vec::with_capacity(k),
            truth_log_marginal: Vec::with_capacity(k),
            nodes: Vec::with_capacity(k),
            converged: Vec::with_capacity(k),
        };
        for &n in &cfg.n_grid {
            let d = data.prefix(n)?;
            let truth = self.spec.build(&d, &cfg.s0)?;
            let y = sample_with_innovations(&truth, &z.rows(0, n).into_owned())?;
            let evaluate = |rho: f64| -> Result<Vec<f64>> {
                let stats = ZellnerStats::new(d.x(), &y, rho)?;
                self.candidates
                    .iter()
                    .zip(&betas)
                    .map(|(s, b)| Ok(finish(stats.parts(s, b, noise_var, prior_scale)?)))
                    .collect()
            };
            let truth_stats = ZellnerStats::new(d.x(), &y, rho0)?;
            let truth_value = finish(truth_stats.parts(&cfg.s0, &beta_s0, noise_var, prior_scale)?);
            if integrate {
                let prior = [cfg.ar1.prior()];
                let refined = refine_log_integrals(&prior, &cfg.quadrature, |theta| evaluate(theta[0]))?;
                out.log_marginal.push(refined.values);
                out.nodes.push(refined.nodes);
                out.converged.push(refined.converged);
            } else {
                let values = self
                    .candidates
                    .iter()
                    .zip(&betas)
                    .map(|(s, b)| Ok(finish(truth_stats.parts(s, b, noise_var, prior_scale)?)))
                    .collect::<Result<Vec<f64>>>()?;
                out.log_marginal.push(values);
                out.nodes.push(1);
                out.converged.push(true);
            }
            out.truth_log_marginal.push(truth_value);
        }
        Ok(out)
    }
}

/// Pairwise comparison among wrong subsets at the largest `n`.
#[derive(Debug, Clone)]
pub struct MisspecResult {
    pub candidates: Vec<SubsetMask>,
    pub n: usize,
    /// Per replicate, `M[i][j] = log IBF_{s_i,s_j}/n` from the two integrated
    /// marginals directly.
    pub per_replicate: Vec<DMatrix<f64>>,
    /// Per replicate, `log IBF_{s_i,s0} − log IBF_{s_j,s0}` divided by `n`.
    pub via_truth: Vec<DMatrix<f64>>,
    /// Replicate mean of `per_replicate`.
    pub mean: DMatrix<f64>,
    /// Candidates ordered from best to worst by row sums of `mean`.
    pub ranking: Vec<SubsetMask>,
    pub delta_hat: Vec<f64>,
}

impl MisspecResult {
    /// Largest `|direct − via_truth|·n` over all replicates and pairs.
    pub fn max_chain_error(&self) -> f64 {
        let n = self.n as f64;
        self.per_replicate
            .iter()
            .zip(&self.via_truth)
            .map(|(a, b)| linalg::max_abs(&((a - b) * n)))
            .fold(0.0, f64::max)
    }

    /// Fraction of replicates with `M[i][j] > 0`.
    pub fn preference_rate(&self, i: usize, j: usize) -> f64 {
        self.per_replicate.iter().filter(|m| m[(i, j)] > 0.0).count() as f64
            / self.per_replicate.len() as f64
    }

    pub fn index_of(&self, s: &SubsetMask) -> Option<usize> {
        self.candidates.iter().position(|c| c == s)
    }
}

/// Runs the experiment over candidates that exclude the true subset.
///
/// With `candidates = "all"` the true subset is dropped; an explicit list
/// containing it is rejected.
pub fn run_misspec(cfg: &ExperimentConfig) -> Result<MisspecResult> {
    let candidates: Vec<SubsetMask> = match &cfg.candidates {
        crate::config::Candidates::All => SubsetMask::all(cfg.p)
            .into_iter()
            .filter(|s| s != &cfg.s0)
            .collect(),
        crate::config::Candidates::List(list) => {
            if list.contains(&cfg.s0) {
                return Err(Error::validation(
                    "candidates",
                    "the misspecified comparison excludes the true subset",
                ));
            }
            list.clone()
        }
    };
    let sim = run_with_candidates(cfg, candidates)?;
    misspec_from(&sim)
}

/// Builds the pairwise matrices from a finished simulation.
pub fn misspec_from(sim: &SimulationResult) -> Result<MisspecResult> {
    let k = sim.n_grid.len() - 1;
    let n = sim.n_grid[k];
    let nf = n as f64;
    let c = sim.candidates.len();
    let mut per_replicate = Vec::with_capacity(sim.log_marginal.len());
    let mut via_truth = Vec::with_capacity(sim.log_marginal.len());
    for (lm, truth) in sim.log_marginal.iter().zip(&sim.truth_log_marginal) {
        let l = &lm[k];
        let t = truth[k];
        per_replicate.push(DMatrix::from_fn(c, c, |i, j| (l[i] - l[j]) / nf));
        via_truth.push(DMatrix::from_fn(c, c, |i, j| ((l[i] - t) - (l[j] - t)) / nf));
    }
    let mut mean = DMatrix::zeros(c, c);
    for m in &per_replicate {
        mean += m;
    }
    mean /= per_replicate.len() as f64;
    let sums: Vec<f64> = (0..c).map(|i| mean.row(i).sum()).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| {
        if better((sums[a], &sim.candidates[a]), (sums[b], &sim.candidates[b])) {
            std::cmp::Ordering::Less
        } else if better((sums[b], &sim.candidates[b]), (sums[a], &sim.candidates[a])) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    Ok(MisspecResult {
        candidates: sim.candidates.clone(),
        n,
        per_replicate,
        via_truth,
        mean,
        ranking: order.iter().map(|&i| sim.candidates[i].clone()).collect(),
        delta_hat: sim.trajectories.iter().map(|t| t.delta_hat).collect(),
    })
}

/// Covariates of replicate 0 at the largest `n`, without a response.
pub fn audit_design(cfg: &ExperimentConfig) -> Result<Dataset> {
    cfg.validate()?;
    let n_max = *cfg.n_grid.last().expect("validated nonempty");
    let (mut cov_rng, _) = replicate_streams(cfg.seed, 0);
    let x = generate_covariates(&mut cov_rng, n_max, cfg.p, cfg.covariate_bound);
    Dataset::design_only(x, cfg.covariate_bound)
}

/// Audits each of `cands` against the true subset on replicate 0's design.
pub fn run_audit(cfg: &ExperimentConfig, cands: &[SubsetMask]) -> Result<Vec<AuditReport>> {
    let data = audit_design(cfg)?;
    let spec = cfg.model_spec();
    for s in cands {
        s.check_within(cfg.p)?;
    }
    cands
        .par_iter()
        .map(|s| audit(&spec, &data, s, &cfg.s0, &cfg.n_grid, &cfg.audit))
        .collect()
}

/// Monte Carlo estimates of `E(zᵀCz)^k` for `k = 1..4` and of
/// `E(zᵀCz − tr C)⁴`, with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub draws: usize,
    pub estimates: [f64; 5],
    pub std_errors: [f64; 5],
    pub closed_forms: [f64; 5],
    /// `|estimate − closed form| ≤ 4·SE` per check.
    pub within: [bool; 5],
}

impl MomentReport {
    pub fn passed(&self) -> bool {
        self.within.iter().all(|w| *w)
    }

    /// Re-evaluates the checks against other reference values.
    pub fn against(&self, closed_forms: [f64; 5]) -> Self {
        let mut within = [false; 5];
        for i in 0..5 {
            within[i] = (self.estimates[i] - closed_forms[i]).abs() <= 4.0 * self.std_errors[i];
        }
        MomentReport {
            closed_forms,
            within,
            ..self.clone()
        }
    }
}

pub fn closed_form_moments(c: &WhitenedForm) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (k, slot) in out.iter_mut().take(4).enumerate() {
        *slot = crate::marginal::quad_form_moments(c, k + 1).expect("order in range");
    }
    out[4] = crate::marginal::central_fourth_moment(c);
    out
}

pub fn mc_moment_check<R: Rng>(c: &WhitenedForm, draws: usize, rng: &mut R) -> Result<MomentReport> {
    if draws < 2 {
        return Err(Error::InvalidInput("at least two draws are needed".into()));
    }
    let n = c.dim();
    let m = c.matrix();
    let tr = c.trace();
    let mut samples: [Vec<f64>; 5] = Default::default();
    for s in samples.iter_mut() {
        s.reserve(draws);
    }
    for _ in 0..draws {
        let z = standard_normals(rng, n);
        let q = z.dot(&(m * &z));
        samples[0].push(q);
        samples[1].push(q * q);
        samples[2].push(q.powi(3));
        samples[3].push(q.powi(4));
        samples[4].push((q - tr).powi(4));
    }
    let estimates = std::array::from_fn(|i| mean(&samples[i]));
    let std_errors = std::array::from_fn(|i| std_error(&samples[i]));
    let base = MomentReport {
        draws,
        estimates,
        std_errors,
        closed_forms: [0.0; 5],
        within: [false; 5],
    };
    Ok(base.against(closed_form_moments(c)))
}
