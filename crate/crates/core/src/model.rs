//! Prior mean vectors and covariance matrices for the three model families:
//! linear regression under Zellner's g-prior, a squared-exponential Gaussian
//! process, and time-varying covariate selection in an AR(1) model.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, SpdMatrix};

/// Responses `y` (length n) and covariates `X` (n×p) on the box `[-B, B]^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    covariate_bound: f64,
}

impl Dataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, covariate_bound: f64) -> Result<Self> {
        if y.is_empty() || x.ncols() == 0 {
            return Err(Error::InvalidInput(
                "dataset needs at least one row and one covariate".into(),
            ));
        }
        check_dim("covariate rows", y.len(), x.nrows())?;
        if !(covariate_bound.is_finite() && covariate_bound > 0.0) {
            return Err(Error::InvalidInput(format!(
                "covariate bound {covariate_bound} must be positive"
            )));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset has non-finite entries".into()));
        }
        let max = linalg::max_abs(&x);
        if max > covariate_bound {
            return Err(Error::InvalidInput(format!(
                "covariate magnitude {max} exceeds bound {covariate_bound}"
            )));
        }
        Ok(Dataset {
            y,
            x,
            covariate_bound,
        })
    }

    /// Dataset whose response is a placeholder; only moments are needed.
    pub fn design_only(x: DMatrix<f64>, covariate_bound: f64) -> Result<Self> {
        Self::new(DVector::zeros(x.nrows()), x, covariate_bound)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn covariate_bound(&self) -> f64 {
        self.covariate_bound
    }

    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        Self::new(y, self.x.clone(), self.covariate_bound)
    }

    /// First `n` rows.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n() {
            return Err(Error::InvalidInput(format!(
                "prefix length {n} outside 1..={}",
                self.n()
            )));
        }
        Ok(Dataset {
            y: self.y.rows(0, n).into_owned(),
            x: self.x.rows(0, n).into_owned(),
            covariate_bound: self.covariate_bound,
        })
    }

    /// Columns of `X` selected by `s`.
    pub fn columns(&self, s: &SubsetMask) -> Result<DMatrix<f64>> {
        s.check_within(self.p())?;
        let cols: Vec<usize> = s.zero_based().collect();
        Ok(self.x.select_columns(cols.iter()))
    }

    /// Reads a CSV with a header row, `y` in the first column and the
    /// covariates in the rest. The covariate bound is taken from the data.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let width = rdr.headers()?.len();
        if width < 2 {
            return Err(Error::InvalidInput(
                "dataset csv needs a y column and at least one covariate".into(),
            ));
        }
        let mut y = Vec::new();
        let mut x = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            for (col, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: row + 2,
                    column: col + 1,
                    message: format!("`{field}` is not a number"),
                })?;
                if col == 0 {
                    y.push(v);
                } else {
                    x.push(v);
                }
            }
        }
        let n = y.len();
        let x = DMatrix::from_row_slice(n, width - 1, &x);
        let bound = linalg::max_abs(&x);
        Self::new(
            DVector::from_vec(y),
            x,
            if bound > 0.0 { bound } else { 1.0 },
        )
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["y".to_string()];
        header.extend((1..=self.p()).map(|j| format!("x{j}")));
        wtr.write_record(&header)?;
        for i in 0..self.n() {
            let mut row = vec![crate::fmt_float(self.y[i])];
            row.extend((0..self.p()).map(|j| crate::fmt_float(self.x[(i, j)])));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// A subset of covariate indices, 1-based, sorted and unique. May be empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SubsetMask(Vec<usize>);

impl SubsetMask {
    /// Sorts and validates; duplicates and zero are rejected.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.first() == Some(&0) {
            return Err(Error::InvalidSubset("indices are 1-based".into()));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSubset(format!(
                "duplicate index in {indices:?}"
            )));
        }
        Ok(SubsetMask(indices))
    }

    pub fn within(indices: Vec<usize>, p: usize) -> Result<Self> {
        let s = Self::new(indices)?;
        s.check_within(p)?;
        Ok(s)
    }

    pub fn empty() -> Self {
        SubsetMask(Vec::new())
    }

    pub fn full(p: usize) -> Self {
        SubsetMask((1..=p).collect())
    }

    /// All `2^p` subsets ordered by size, then lexicographically.
    pub fn all(p: usize) -> Vec<SubsetMask> {
        assert!(p < usize::BITS as usize, "too many covariates to enumerate");
        let mut out: Vec<SubsetMask> = (0..(1usize << p))
            .map(|bits| SubsetMask((1..=p).filter(|j| bits >> (j - 1) & 1 == 1).collect()))
            .collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.0.cmp(&b.0)));
        out
    }

    pub fn check_within(&self, p: usize) -> Result<()> {
        match self.0.last() {
            Some(&max) if max > p => Err(Error::InvalidSubset(format!(
                "index {max} exceeds the number of covariates {p}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn zero_based(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|j| j - 1)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn is_subset_of(&self, other: &SubsetMask) -> bool {
        self.0.iter().all(|j| other.contains(*j))
    }

    /// Entries of a full-length coefficient vector at this subset's indices.
    pub fn restrict(&self, full: &[f64]) -> Result<DVector<f64>> {
        self.check_within(full.len())?;
        Ok(DVector::from_iterator(
            self.len(),
            self.zero_based().map(|j| full[j]),
        ))
    }
}

impl TryFrom<Vec<usize>> for SubsetMask {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        SubsetMask::new(v)
    }
}

impl From<SubsetMask> for Vec<usize> {
    fn from(s: SubsetMask) -> Self {
        s.0
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, j) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

/// Zellner g-prior `β_s ~ N(β_{0,s}, g·σ²_β·(X_sᵀX_s)⁻¹)` with known noise
/// variance. `beta0` is full length; each subset takes its coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearZellnerSpec {
    pub beta0: Vec<f64>,
    pub sigma_beta_sq: f64,
    pub g: f64,
    pub sigma_eps_sq: f64,
}

impl LinearZellnerSpec {
    pub fn validate(&self, p: usize) -> Result<()> {
        validate_zellner("linear", &self.beta0, self.sigma_beta_sq, self.g, self.sigma_eps_sq, p)
    }

    /// Prior scale `σ²_β·g` of the projection.
    pub fn prior_scale(&self) -> f64 {
        self.sigma_beta_sq * self.g
    }
}

fn validate_zellner(
    block: &str,
    beta0: &[f64],
    sigma_beta_sq: f64,
    g: f64,
    sigma_eps_sq: f64,
    p: usize,
) -> Result<()> {
    if beta0.len() != p {
        return Err(Error::validation(
            format!("{block}.beta0"),
            format!("needs {p} entries, found {}", beta0.len()),
        ));
    }
    if beta0.iter().any(|b| !b.is_finite()) {
        return Err(Error::validation(format!("{block}.beta0"), "entries must be finite"));
    }
    for (name, v) in [
        ("sigma_beta_sq", sigma_beta_sq),
        ("g", g),
        ("sigma_eps_sq", sigma_eps_sq),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::validation(
                format!("{block}.{name}"),
                format!("must be finite and > 0, found {v}"),
            ));
        }
    }
    Ok(())
}

/// Bounded mean functions for the squared-exponential family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeanFn {
    Constant { value: f64 },
    /// `clamp(aᵀx_s, -bound, bound)` with `a` restricted to the subset.
    ClippedLinear { coef: Vec<f64>, bound: f64 },
}

impl MeanFn {
    pub fn bound(&self) -> f64 {
        match self {
            MeanFn::Constant { value } => value.abs(),
            MeanFn::ClippedLinear { bound, .. } => *bound,
        }
    }

    /// Mean at a covariate row restricted to `s` (`row` holds all p values).
    pub fn eval(&self, s: &SubsetMask, row: &[f64]) -> f64 {
        match self {
            MeanFn::Constant { value } => *value,
            MeanFn::ClippedLinear { coef, bound } => {
                let v: f64 = s.zero_based().map(|j| coef[j] * row[j]).sum();
                v.clamp(-bound, *bound)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeKernelSpec {
    pub sigma_f_sq: f64,
    /// Diagonal of `D`, one entry per covariate.
    pub precision: Vec<f64>,
    pub mean: MeanFn,
    pub sigma_eps_sq: f64,
}

impl SeKernelSpec {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.precision.len() != p {
            return Err(Error::validation(
                "se.precision",
                format!("needs {p} entries, found {}", self.precision.len()),
            ));
        }
        if self.precision.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::validation("se.precision", "entries must be > 0"));
        }
        for (name, v) in [
            ("sigma_f_sq", self.sigma_f_sq),
            ("sigma_eps_sq", self.sigma_eps_sq),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(
                    format!("se.{name}"),
                    format!("must be finite and > 0, found {v}"),
                ));
            }
        }
        match &self.mean {
            MeanFn::Constant { value } if !value.is_finite() => {
                Err(Error::validation("se.mean.value", "must be finite"))
            }
            MeanFn::ClippedLinear { coef, bound } => {
                if coef.len() != p {
                    Err(Error::validation(
                        "se.mean.coef",
                        format!("needs {p} entries, found {}", coef.len()),
                    ))
                } else if !(bound.is_finite() && *bound > 0.0) {
                    Err(Error::validation("se.mean.bound", "must be finite and > 0"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Zellner prior on the AR(1)-filtered design, with AR coefficient `rho`
/// supported on `[-1+γ, 1-γ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ar1Spec {
    pub rho: f64,
    pub gamma: f64,
    pub beta0: Vec<f64>,
    pub sigma_beta_sq: f64,
    pub g: f64,
    pub sigma_eps_sq: f64,
}

impl Ar1Spec {
    pub fn validate(&self, p: usize) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::validation(
                "ar1.gamma",
                format!("must lie in (0, 1), found {}", self.gamma),
            ));
        }
        check_rho_support(self.rho, self.gamma).map_err(|_| {
            Error::validation(
                "ar1.rho",
                format!(
                    "must lie in [-1+gamma, 1-gamma] = [{}, {}], found {}",
                    -1.0 + self.gamma,
                    1.0 - self.gamma,
                    self.rho
                ),
            )
        })?;
        validate_zellner("ar1", &self.beta0, self.sigma_beta_sq, self.g, self.sigma_eps_sq, p)
    }

    pub fn prior_scale(&self) -> f64 {
        self.sigma_beta_sq * self.g
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        Ar1Spec { rho, ..self.clone() }
    }
}

pub fn check_rho_support(rho: f64, gamma: f64) -> Result<()> {
    // tolerance so quadrature end nodes computed in floating point pass
    let edge = 1.0 - gamma + 1e-12;
    if rho.is_finite() && rho.abs() <= edge {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "rho {rho} outside [-1+{gamma}, 1-{gamma}]"
        )))
    }
}

/// Prior mean `μ_s`, prior covariance `Σ_s` of the latent function values
/// and the noise covariance; the marginal of `y` is `N(μ_s, noise + Σ_s)`.
#[derive(Debug, Clone)]
pub struct ModelMoments {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub noise_cov: SpdMatrix,
}

impl ModelMoments {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, noise_cov: SpdMatrix) -> Result<Self> {
        let n = mu.len();
        check_dim("prior covariance rows", n, sigma.nrows())?;
        check_dim("prior covariance columns", n, sigma.ncols())?;
        check_dim("noise covariance", n, noise_cov.dim())?;
        Ok(ModelMoments {
            mu,
            sigma,
            noise_cov,
        })
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// `noise_cov + Σ_s`.
    pub fn marginal_cov(&self) -> DMatrix<f64> {
        self.noise_cov.matrix() + &self.sigma
    }

    pub fn marginal_spd(&self) -> Result<SpdMatrix> {
        SpdMatrix::new(self.marginal_cov())
    }
}

/// Orthogonal projection onto the column space of `design`.
///
/// Rank is judged from the R factor of a QR decomposition.
pub fn projection(design: &DMatrix<f64>, label: &dyn fmt::Display) -> Result<DMatrix<f64>> {
    let n = design.nrows();
    let k = design.ncols();
    if k == 0 {
        return Ok(DMatrix::zeros(n, n));
    }
    if k > n {
        return Err(Error::RankDeficient {
            subset: label.to_string(),
        });
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let scale = (0..k)
        .map(|j| design.column(j).norm())
        .fold(0.0_f64, f64::max);
    if (0..k).any(|j| r[(j, j)].abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::RankDeficient {
            subset: label.to_string(),
        });
    }
    let q = qr.q();
    let p = &q * q.transpose();
    Ok((&p + p.transpose()) * 0.5)
}

pub fn build_linear_zellner(
    data: &Dataset,
    s: &SubsetMask,
    spec: &LinearZellnerSpec,
) -> Result<ModelMoments> {
    spec.validate(data.p())?;
    let xs = data.columns(s)?;
    zellner_moments(
        &xs,
        s,
        &s.restrict(&spec.beta0)?,
        spec.prior_scale(),
        SpdMatrix::scaled_identity(data.n(), spec.sigma_eps_sq),
    )
}

fn zellner_moments(
    design: &DMatrix<f64>,
    s: &SubsetMask,
    beta0: &DVector<f64>,
    prior_scale: f64,
    noise_cov: SpdMatrix,
) -> Result<ModelMoments> {
    let n = design.nrows();
    if s.is_empty() {
        return ModelMoments::new(DVector::zeros(n), DMatrix::zeros(n, n), noise_cov);
    }
    let p = projection(design, s)?;
    ModelMoments::new(design * beta0, p * prior_scale, noise_cov)
}

/// Unit-diagonal squared-exponential correlation matrix over the columns in
/// `s`: `exp(-½ Σ_{k∈s} D_k (x_ik − x_jk)²)`.
pub fn se_correlation(data: &Dataset, s: &SubsetMask, precision: &[f64]) -> Result<DMatrix<f64>> {
    s.check_within(data.p())?;
    check_dim("kernel precision entries", data.p(), precision.len())?;
    let n = data.n();
    let x = data.x();
    let cols: Vec<usize> = s.zero_based().collect();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        k[(j, j)] = 1.0;
        for i in (j + 1)..n {
            let d2: f64 = cols
                .iter()
                .map(|&c| precision[c] * (x[(i, c)] - x[(j, c)]).powi(2))
                .sum();
            let v = (-0.5 * d2).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

pub fn se_mean(data: &Dataset, s: &SubsetMask, mean: &MeanFn) -> DVector<f64> {
    if s.is_empty() {
        return DVector::zeros(data.n());
    }
    let x = data.x();
    DVector::from_fn(data.n(), |i, _| {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        mean.eval(s, &row)
    })
}

pub fn build_se_gp(data: &Dataset, s: &SubsetMask, spec: &SeKernelSpec) -> Result<ModelMoments> {
    spec.validate(data.p())?;
    let n = data.n();
    let noise = SpdMatrix::scaled_identity(n, spec.sigma_eps_sq);
    if s.is_empty() {
        return ModelMoments::new(DVector::zeros(n), DMatrix::zeros(n, n), noise);
    }
    let sigma = se_correlation(data, s, &spec.precision)? * spec.sigma_f_sq;
    ModelMoments::new(se_mean(data, s, &spec.mean), sigma, noise)
}

/// Rows `z_t = Σ_{k≤t} ρ^{t−k} x_k` over the columns in `s`, via
/// `z_t = ρ·z_{t−1} + x_t` with `z_0 = 0`.
pub fn build_ar1_design(data: &Dataset, s: &SubsetMask, rho: f64) -> Result<DMatrix<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidInput(format!("|rho| = {} must be < 1", rho.abs())));
    }
    let xs = data.columns(s)?;
    Ok(ar1_filter(&xs, rho))
}

pub(crate) fn ar1_filter(x: &DMatrix<f64>, rho: f64) -> DMatrix<f64> {
    let mut z = x.clone();
    for t in 1..z.nrows() {
        for c in 0..z.ncols() {
            z[(t, c)] += rho * z[(t - 1, c)];
        }
    }
    z
}

/// `σ²_ε (1−ρ²)⁻¹ Σ_ε` with `(Σ_ε)_ij = ρ^|i−j|`.
pub fn ar1_error_cov(n: usize, rho: f64, sigma_eps_sq: f64) -> Result<SpdMatrix> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidInput(format!("|rho| = {} must be < 1", rho.abs())));
    }
    if n == 0 {
        return Err(Error::EmptyInput("AR(1) covariance of dimension 0"));
    }
    let scale = sigma_eps_sq / (1.0 - rho * rho);
    let powers: Vec<f64> = (0..n).map(|h| scale * rho.powi(h as i32)).collect();
    let m = DMatrix::from_fn(n, n, |i, j| powers[i.abs_diff(j)]);
    SpdMatrix::new(m)
}

/// Symmetric tridiagonal matrix stored by its diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag));
        for (i, v) in self.off.iter().enumerate() {
            m[(i + 1, i)] = *v;
            m[(i, i + 1)] = *v;
        }
        debug_assert_eq!(m.nrows(), n);
        m
    }

    /// `aᵀ·T·b`.
    pub fn bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim() {
            acc += a[i] * self.diag[i] * b[i];
        }
        for (i, o) in self.off.iter().enumerate() {
            acc += o * (a[i] * b[i + 1] + a[i + 1] * b[i]);
        }
        acc
    }
}

/// `(1−ρ²)·Σ_ε⁻¹`: diagonal `(1, 1+ρ², …, 1+ρ², 1)`, off-diagonal `−ρ`.
/// For `n = 1` the single entry is `1−ρ²`.
pub fn ar1_precision_tridiag(n: usize, rho: f64) -> Result<SymTridiagonal> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidInput(format!("|rho| = {} must be < 1", rho.abs())));
    }
    if n == 0 {
        return Err(Error::EmptyInput("AR(1) precision of dimension 0"));
    }
    if n == 1 {
        return Ok(SymTridiagonal {
            diag: vec![1.0 - rho * rho],
            off: vec![],
        });
    }
    let mut diag = vec![1.0 + rho * rho; n];
    diag[0] = 1.0;
    diag[n - 1] = 1.0;
    Ok(SymTridiagonal {
        diag,
        off: vec![-rho; n - 1],
    })
}

/// Approximate eigenvalues of `(1−ρ²)·Σ_ε⁻¹` with their error bounds, indexed
/// by `k = 1..n`:
/// `λ_k ≈ 1 − 2ρ·cos θ_k + ρ² − 4ρ²·sin²θ_k/(n+1)`,
/// `ξ_k = 2ρ²·sin θ_k/√(n+1)`, `θ_k = kπ/(n+1)`.
///
/// The sequence is increasing in k for ρ > 0 and decreasing for ρ < 0.
pub fn ar1_precision_eigs_approx(n: usize, rho: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidInput(format!("|rho| = {} must be < 1", rho.abs())));
    }
    if n == 0 {
        return Err(Error::EmptyInput("AR(1) precision of dimension 0"));
    }
    let m = (n + 1) as f64;
    let rho2 = rho * rho;
    let (values, bounds) = (1..=n)
        .map(|k| {
            let theta = k as f64 * std::f64::consts::PI / m;
            let (sin, cos) = theta.sin_cos();
            (
                1.0 - 2.0 * rho * cos + rho2 - 4.0 / m * rho2 * sin * sin,
                2.0 * rho2 / m.sqrt() * sin,
            )
        })
        .unzip();
    Ok((values, bounds))
}

pub fn build_ar1_zellner(data: &Dataset, s: &SubsetMask, spec: &Ar1Spec) -> Result<ModelMoments> {
    spec.validate(data.p())?;
    let z = build_ar1_design(data, s, spec.rho)?;
    zellner_moments(
        &z,
        s,
        &s.restrict(&spec.beta0)?,
        spec.prior_scale(),
        ar1_error_cov(data.n(), spec.rho, spec.sigma_eps_sq)?,
    )
}

/// One of the three model families with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Linear(LinearZellnerSpec),
    Se(SeKernelSpec),
    Ar1(Ar1Spec),
}

impl ModelSpec {
    pub fn build(&self, data: &Dataset, s: &SubsetMask) -> Result<ModelMoments> {
        match self {
            ModelSpec::Linear(spec) => build_linear_zellner(data, s, spec),
            ModelSpec::Se(spec) => build_se_gp(data, s, spec),
            ModelSpec::Ar1(spec) => build_ar1_zellner(data, s, spec),
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        match self {
            ModelSpec::Linear(spec) => spec.validate(p),
            ModelSpec::Se(spec) => spec.validate(p),
            ModelSpec::Ar1(spec) => spec.validate(p),
        }
    }

    pub fn sigma_eps_sq(&self) -> f64 {
        match self {
            ModelSpec::Linear(spec) => spec.sigma_eps_sq,
            ModelSpec::Se(spec) => spec.sigma_eps_sq,
            ModelSpec::Ar1(spec) => spec.sigma_eps_sq,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_data(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
        Dataset::design_only(x, 1.0).unwrap()
    }

    fn lin_spec(p: usize) -> LinearZellnerSpec {
        LinearZellnerSpec {
            beta0: (0..p).map(|j| 1.0 - 0.3 * j as f64).collect(),
            sigma_beta_sq: 1.5,
            g: 2.0,
            sigma_eps_sq: 0.7,
        }
    }

    #[test]
    fn dataset_rejects_out_of_bound_covariates() {
        let x = DMatrix::from_row_slice(2, 1, &[0.5, 2.0]);
        assert!(Dataset::design_only(x, 1.0).is_err());
    }

    #[test]
    fn dataset_csv_roundtrip() {
        let data = random_data(5, 2, 1).with_response(DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.y(), data.y());
        assert_eq!(back.x(), data.x());
    }

    #[test]
    fn dataset_csv_reports_position() {
        let text = "y,x1\n1.0,0.5\n2.0,abc\n";
        match Dataset::read_csv(text.as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn subset_validation_and_enumeration() {
        assert!(SubsetMask::new(vec![0]).is_err());
        assert!(SubsetMask::new(vec![2, 2]).is_err());
        assert!(SubsetMask::within(vec![5], 4).is_err());
        let s = SubsetMask::new(vec![3, 1]).unwrap();
        assert_eq!(s.indices(), &[1, 3]);
        assert_eq!(s.to_string(), "{1,3}");
        let all = SubsetMask::all(4);
        assert_eq!(all.len(), 16);
        assert!(all[0].is_empty());
        assert_eq!(all[15], SubsetMask::full(4));
        assert_eq!(all[1].indices(), &[1]);
        assert_eq!(all[5].indices(), &[1, 2]);
    }

    #[test]
    fn subset_serde_validates() {
        let s: SubsetMask = serde_json::from_str("[2, 1]").unwrap();
        assert_eq!(s.indices(), &[1, 2]);
        assert!(serde_json::from_str::<SubsetMask>("[1, 1]").is_err());
    }

    #[test]
    fn linear_zellner_coordinate_projection() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let data = Dataset::design_only(x, 1.0).unwrap();
        let spec = LinearZellnerSpec {
            beta0: vec![2.0],
            sigma_beta_sq: 1.5,
            g: 2.0,
            sigma_eps_sq: 1.0,
        };
        let m = build_linear_zellner(&data, &SubsetMask::full(1), &spec).unwrap();
        assert_relative_eq!(m.mu, DVector::from_vec(vec![2.0, 0.0, 0.0]));
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.0, 0.0]));
        assert_relative_eq!(m.sigma, expected, epsilon = 1e-14);
    }

    #[test]
    fn linear_zellner_spectrum_and_trace() {
        let data = random_data(20, 3, 2);
        let spec = lin_spec(3);
        let s = SubsetMask::new(vec![1, 2]).unwrap();
        let m = build_linear_zellner(&data, &s, &spec).unwrap();
        let c = spec.prior_scale();
        assert_relative_eq!(m.sigma.trace(), 2.0 * c, epsilon = 1e-8);
        let eig = linalg::symmetric_eigenvalues(&m.sigma).unwrap();
        for (i, l) in eig.iter().enumerate() {
            let expected = if i >= 18 { c } else { 0.0 };
            assert!((l - expected).abs() < 1e-10, "eigenvalue {i} = {l}");
        }
        let p = &m.sigma / c;
        assert!(linalg::max_abs(&(&p * &p - &p)) <= 1e-8);
    }

    #[test]
    fn linear_zellner_empty_subset_is_pure_noise() {
        let data = random_data(6, 2, 3);
        let m = build_linear_zellner(&data, &SubsetMask::empty(), &lin_spec(2)).unwrap();
        assert_eq!(m.mu, DVector::zeros(6));
        assert_eq!(m.sigma, DMatrix::zeros(6, 6));
    }

    #[test]
    fn linear_zellner_rank_deficient() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.5, 0.5, 0.2, 0.2]);
        let data = Dataset::design_only(x, 1.0).unwrap();
        let err = build_linear_zellner(&data, &SubsetMask::full(2), &lin_spec(2)).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
    }

    fn se_spec(p: usize) -> SeKernelSpec {
        SeKernelSpec {
            sigma_f_sq: 1.3,
            precision: vec![1.0; p],
            mean: MeanFn::Constant { value: 0.25 },
            sigma_eps_sq: 1.0,
        }
    }

    #[test]
    fn se_kernel_entries() {
        let x = DMatrix::from_row_slice(3, 1, &[0.5, 0.5, -0.5]);
        let data = Dataset::design_only(x, 1.0).unwrap();
        let m = build_se_gp(&data, &SubsetMask::full(1), &se_spec(1)).unwrap();
        assert_eq!(m.sigma[(0, 1)], 1.3);
        assert_relative_eq!(m.sigma[(0, 2)], 1.3 * (-0.5f64).exp(), epsilon = 1e-15);
        assert_eq!(m.mu, DVector::from_element(3, 0.25));

        // five points at unit spacing
        let x = DMatrix::from_fn(5, 1, |i, _| i as f64);
        let data = Dataset::design_only(x, 5.0).unwrap();
        let mut spec = se_spec(1);
        spec.sigma_f_sq = 1.0;
        let m = build_se_gp(&data, &SubsetMask::full(1), &spec).unwrap();
        assert_relative_eq!(m.sigma[(0, 1)], 0.60653065971263342, epsilon = 1e-15);

        // D·Δx² = 200
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 10.0]);
        let data = Dataset::design_only(x, 10.0).unwrap();
        let mut spec = se_spec(1);
        spec.precision = vec![2.0];
        let m = build_se_gp(&data, &SubsetMask::full(1), &spec).unwrap();
        assert!(m.sigma[(0, 1)] <= 1.3 * (-100f64).exp());
    }

    #[test]
    fn clipped_linear_mean_is_bounded() {
        let mean = MeanFn::ClippedLinear {
            coef: vec![3.0, -2.0],
            bound: 1.5,
        };
        let s = SubsetMask::full(2);
        let steps = 21;
        for i in 0..steps {
            for j in 0..steps {
                let row = [
                    -1.0 + 2.0 * i as f64 / (steps - 1) as f64,
                    -1.0 + 2.0 * j as f64 / (steps - 1) as f64,
                ];
                assert!(mean.eval(&s, &row).abs() <= mean.bound());
            }
        }
        assert_eq!(mean.eval(&SubsetMask::new(vec![1]).unwrap(), &[0.25, 1.0]), 0.75);
    }

    #[test]
    fn ar1_design_cases() {
        let data = random_data(10, 2, 4);
        let s = SubsetMask::full(2);
        assert_eq!(build_ar1_design(&data, &s, 0.0).unwrap(), *data.x());

        let ones = Dataset::design_only(DMatrix::from_element(3, 1, 1.0), 1.0).unwrap();
        let z = build_ar1_design(&ones, &SubsetMask::full(1), 0.5).unwrap();
        assert_eq!(z.as_slice(), &[1.0, 1.5, 1.75]);

        let rho = -0.7;
        let z = build_ar1_design(&data, &s, rho).unwrap();
        for t in 0..10 {
            for c in 0..2 {
                let direct: f64 = (0..=t).map(|k| rho.powi((t - k) as i32) * data.x()[(k, c)]).sum();
                assert_relative_eq!(z[(t, c)], direct, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn ar1_error_cov_cases() {
        let c = ar1_error_cov(3, 0.0, 2.0).unwrap();
        assert_eq!(*c.matrix(), DMatrix::identity(3, 3) * 2.0);
        let c = ar1_error_cov(2, 0.5, 1.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]) * (4.0 / 3.0);
        assert_relative_eq!(*c.matrix(), expected, epsilon = 1e-15);
    }

    #[test]
    fn ar1_tridiagonal_inverts_covariance() {
        let t = ar1_precision_tridiag(3, 0.5).unwrap();
        assert_eq!(t.diag, vec![1.0, 1.25, 1.0]);
        assert_eq!(t.off, vec![-0.5, -0.5]);
        assert_eq!(ar1_precision_tridiag(4, 0.0).unwrap().to_dense(), DMatrix::identity(4, 4));

        for (n, rho) in [(100, 0.6f64), (50, -0.8), (1, 0.4)] {
            let corr = DMatrix::from_fn(n, n, |i, j| rho.powi(i.abs_diff(j) as i32));
            let t = ar1_precision_tridiag(n, rho).unwrap().to_dense();
            let prod = &t * &corr;
            assert!(linalg::max_abs(&(prod - DMatrix::identity(n, n) * (1.0 - rho * rho))) <= 1e-8);

            let sigma2 = 1.7;
            let cov = ar1_error_cov(n, rho, sigma2).unwrap();
            let inv_from_tridiag = &t / sigma2;
            let id = cov.matrix() * inv_from_tridiag;
            assert!(linalg::max_abs(&(id - DMatrix::identity(n, n))) <= 1e-8);
            let dense_inv = cov.matrix().clone().try_inverse().unwrap();
            assert!(linalg::max_abs(&(dense_inv - &t / sigma2)) <= 1e-8);
        }
    }

    #[test]
    fn ar1_eigen_approximation() {
        let (v, b) = ar1_precision_eigs_approx(7, 0.0).unwrap();
        assert!(v.iter().all(|x| *x == 1.0));
        assert!(b.iter().all(|x| *x == 0.0));

        for rho in [0.9, -0.9, 0.3] {
            let n = 200;
            let (v, b) = ar1_precision_eigs_approx(n, rho).unwrap();
            let exact = linalg::symmetric_eigenvalues(&ar1_precision_tridiag(n, rho).unwrap().to_dense()).unwrap();
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
            for (rank, &k) in idx.iter().enumerate() {
                assert!((v[k] - exact[rank]).abs() <= b[k], "rho {rho} k {k}");
            }
            if rho > 0.0 {
                assert!(v.windows(2).all(|w| w[0] <= w[1]));
            } else {
                assert!(v.windows(2).all(|w| w[0] >= w[1]));
            }
            let max_xi = b.iter().copied().fold(0.0, f64::max);
            let a = rho.abs();
            assert!(v.iter().all(|x| *x >= (1.0 - a).powi(2) - max_xi && *x <= (1.0 + a).powi(2) + max_xi));
        }
    }

    #[test]
    fn ar1_zellner_reduces_to_linear_at_rho_zero() {
        let data = random_data(15, 3, 5);
        let s = SubsetMask::new(vec![1, 3]).unwrap();
        let lin = lin_spec(3);
        let ar = Ar1Spec {
            rho: 0.0,
            gamma: 0.1,
            beta0: lin.beta0.clone(),
            sigma_beta_sq: lin.sigma_beta_sq,
            g: lin.g,
            sigma_eps_sq: lin.sigma_eps_sq,
        };
        let a = build_ar1_zellner(&data, &s, &ar).unwrap();
        let b = build_linear_zellner(&data, &s, &lin).unwrap();
        assert_relative_eq!(a.mu, b.mu, epsilon = 1e-14);
        assert_relative_eq!(a.sigma, b.sigma, epsilon = 1e-14);
        assert_relative_eq!(a.noise_cov.matrix(), b.noise_cov.matrix(), epsilon = 1e-14);
    }

    #[test]
    fn ar1_zellner_trace_and_noise_spectrum() {
        let data = random_data(200, 3, 6);
        let s = SubsetMask::new(vec![2, 3]).unwrap();
        let spec = Ar1Spec {
            rho: 0.7,
            gamma: 0.1,
            beta0: vec![1.0, 0.5, -0.5],
            sigma_beta_sq: 1.0,
            g: 2.0,
            sigma_eps_sq: 1.5,
        };
        let m = build_ar1_zellner(&data, &s, &spec).unwrap();
        assert_relative_eq!(m.sigma.trace(), 2.0 * spec.prior_scale(), epsilon = 1e-8);
        let (lo, hi) = linalg::extreme_eigs(m.noise_cov.matrix()).unwrap();
        let slack = 0.05;
        assert!(lo >= spec.sigma_eps_sq / ((1.0 + 0.7f64).powi(2) + slack));
        assert!(hi <= spec.sigma_eps_sq / ((1.0 - 0.7f64).powi(2) - slack));
    }

    #[test]
    fn ar1_spec_support() {
        let mut spec = Ar1Spec {
            rho: 0.95,
            gamma: 0.1,
            beta0: vec![1.0],
            sigma_beta_sq: 1.0,
            g: 1.0,
            sigma_eps_sq: 1.0,
        };
        assert!(matches!(spec.validate(1), Err(Error::Validation { .. })));
        spec.rho = -0.9;
        assert!(spec.validate(1).is_ok());
    }
}
