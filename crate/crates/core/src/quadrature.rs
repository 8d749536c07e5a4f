//! Gauss-Legendre rules, priors on compact hyperparameter intervals, and
//! tensor-product quadrature grids of dimension one or two.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{check_dim, Error, Result};
use crate::linalg::log_sum_exp;

const MASS_TOL: f64 = 1e-6;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::EmptyGrid);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ConvergenceFailure(format!(
                "Gauss-Legendre node {i} of {n}"
            )));
        }
        let (_, d) = legendre(n, x);
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A prior density on a compact interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Prior1d {
    Uniform { lo: f64, hi: f64 },
    /// Normal(mean, sd²) renormalized to `[lo, hi]`.
    TruncatedNormal { mean: f64, sd: f64, lo: f64, hi: f64 },
}

impl Prior1d {
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Prior1d::Uniform { lo, hi } | Prior1d::TruncatedNormal { lo, hi, .. } => (lo, hi),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.support();
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!(
                "prior support [{lo}, {hi}] is not a compact interval"
            )));
        }
        if let Prior1d::TruncatedNormal { mean, sd, .. } = *self {
            if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "truncated normal needs finite mean and sd > 0, found ({mean}, {sd})"
                )));
            }
        }
        Ok(())
    }

    pub fn density(&self, theta: f64) -> f64 {
        let (lo, hi) = self.support();
        if theta < lo || theta > hi {
            return 0.0;
        }
        match *self {
            Prior1d::Uniform { lo, hi } => 1.0 / (hi - lo),
            Prior1d::TruncatedNormal { mean, sd, lo, hi } => {
                let cdf = |v: f64| 0.5 * (1.0 + erf((v - mean) / (sd * std::f64::consts::SQRT_2)));
                let z = (theta - mean) / sd;
                let pdf = (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
                pdf / (cdf(hi) - cdf(lo))
            }
        }
    }
}

/// Adaptive refinement settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSettings {
    pub nodes: usize,
    pub max_nodes: usize,
    pub tol: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            nodes: 64,
            max_nodes: 512,
            tol: 1e-6,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::validation("quadrature.nodes", "must be >= 1"));
        }
        if self.max_nodes < self.nodes {
            return Err(Error::validation("quadrature.max_nodes", "must be >= quadrature.nodes"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::validation("quadrature.tol", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Nodes `θ_i`, weights `w_i > 0` and prior densities `π(θ_i) > 0` with
/// `Σ w_i·π(θ_i) ≈ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    prior_density: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(nodes: Vec<Vec<f64>>, weights: Vec<f64>, prior_density: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyGrid);
        }
        check_dim("quadrature weights", nodes.len(), weights.len())?;
        check_dim("quadrature densities", nodes.len(), prior_density.len())?;
        let dim = nodes[0].len();
        if dim == 0 {
            return Err(Error::EmptyGrid);
        }
        if dim > 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        for node in &nodes {
            check_dim("quadrature node dimension", dim, node.len())?;
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput("quadrature weights must be positive".into()));
        }
        if prior_density.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidInput(
                "prior density must be positive at every node".into(),
            ));
        }
        let mass: f64 = weights.iter().zip(&prior_density).map(|(w, d)| w * d).sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidInput(format!(
                "prior mass on the grid is {mass}, expected 1"
            )));
        }
        Ok(QuadratureGrid {
            nodes,
            weights,
            prior_density,
        })
    }

    /// Degenerate prior at `theta`: one node with weight and density 1.
    pub fn point_mass(theta: Vec<f64>) -> Result<Self> {
        Self::new(vec![theta], vec![1.0], vec![1.0])
    }

    /// Tensor-product Gauss-Legendre grid with `n` nodes per prior.
    pub fn gauss_legendre(priors: &[Prior1d], n: usize) -> Result<Self> {
        match priors.len() {
            0 => return Err(Error::EmptyGrid),
            1 | 2 => {}
            d => return Err(Error::UnsupportedDimension(d)),
        }
        let (x, w) = gauss_legendre(n)?;
        let mut axes = Vec::with_capacity(priors.len());
        for prior in priors {
            prior.validate()?;
            let (lo, hi) = prior.support();
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let axis: Vec<(f64, f64, f64)> = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| {
                    let t = mid + half * xi;
                    (t, wi * half, prior.density(t))
                })
                .collect();
            axes.push(axis);
        }
        let (mut nodes, mut weights, mut dens) = (Vec::new(), Vec::new(), Vec::new());
        if axes.len() == 1 {
            for &(t, wi, d) in &axes[0] {
                nodes.push(vec![t]);
                weights.push(wi);
                dens.push(d);
            }
        } else {
            for &(t1, w1, d1) in &axes[0] {
                for &(t2, w2, d2) in &axes[1] {
                    nodes.push(vec![t1, t2]);
                    weights.push(w1 * w2);
                    dens.push(d1 * d2);
                }
            }
        }
        Self::new(nodes, weights, dens)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prior_density(&self) -> &[f64] {
        &self.prior_density
    }

    /// `w_i·π(θ_i)`.
    pub fn masses(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.prior_density)
            .map(|(w, d)| w * d)
            .collect()
    }

    /// `log Σ_i w_i·π(θ_i)·exp(f(θ_i))`, nodes evaluated in order.
    pub fn log_integrate<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let values = self
            .nodes
            .iter()
            .map(|node| f(node))
            .collect::<Result<Vec<f64>>>()?;
        log_sum_exp(&values, &self.masses())
    }

    /// Like [`log_integrate`](Self::log_integrate) for a vector-valued
    /// integrand; returns one log integral per component.
    pub fn log_integrate_many<F>(&self, mut f: F) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let rows = self
            .nodes
            .iter()
            .map(|node| f(node))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let k = rows[0].len();
        let masses = self.masses();
        (0..k)
            .map(|j| {
                let column: Vec<f64> = rows
                    .iter()
                    .map(|r| {
                        check_dim("integrand components", k, r.len())?;
                        Ok(r[j])
                    })
                    .collect::<Result<_>>()?;
                log_sum_exp(&column, &masses)
            })
            .collect()
    }
}

/// Outcome of a refinement sequence `n, 2n, 4n, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    pub values: Vec<f64>,
    pub nodes: usize,
    pub converged: bool,
}

/// Doubles the node count until successive values agree within `tol` in
/// every component, or `max_nodes` is reached.
pub fn refine_log_integrals<F>(
    priors: &[Prior1d],
    settings: &QuadratureSettings,
    mut f: F,
) -> Result<Refined>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    settings.validate()?;
    let mut n = settings.nodes;
    let mut prev = QuadratureGrid::gauss_legendre(priors, n)?.log_integrate_many(&mut f)?;
    while n * 2 <= settings.max_nodes {
        n *= 2;
        let next = QuadratureGrid::gauss_legendre(priors, n)?.log_integrate_many(&mut f)?;
        let diff = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max);
        prev = next;
        if diff <= settings.tol {
            return Ok(Refined {
                values: prev,
                nodes: n,
                converged: true,
            });
        }
    }
    Ok(Refined {
        values: prev,
        nodes: n,
        converged: false,
    })
}
