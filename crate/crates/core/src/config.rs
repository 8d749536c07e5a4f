//! Experiment configuration: JSON schema, defaults, dotted-path overrides
//! and validation.
//!
//! A configuration needs only `family`, `p` and `s0`; every other key takes
//! a default that may depend on `p`. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::audit::AuditThresholds;
use crate::error::{Error, Result};
use crate::marginal::check_inverse_gamma;
use crate::model::{Ar1Spec, LinearZellnerSpec, ModelSpec, SeKernelSpec, SubsetMask};
use crate::quadrature::{Prior1d, QuadratureSettings};

/// Largest `p` for which all `2^p` subsets may be enumerated.
pub const MAX_P: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    Se,
    Ar1,
}

/// Either every subset of `{1..p}` (written `"all"`) or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Candidates {
    All,
    List(Vec<SubsetMask>),
}

impl Serialize for Candidates {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Candidates::All => s.serialize_str("all"),
            Candidates::List(list) => list.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Candidates {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match Value::deserialize(d)? {
            Value::String(s) if s == "all" => Ok(Candidates::All),
            v @ Value::Array(_) => serde_json::from_value(v)
                .map(Candidates::List)
                .map_err(D::Error::custom),
            other => Err(D::Error::custom(format!(
                "candidates must be \"all\" or a list of subsets, found {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VarianceMode {
    Known,
    /// Inverse-gamma prior on the error variance. With
    /// `tie_process_variance` the squared-exponential process variance is
    /// set equal to the error variance.
    InverseGamma {
        alpha: f64,
        beta: f64,
        tie_process_variance: bool,
    },
}

/// Prior on the AR coefficient over `[-1+γ, 1-γ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoPrior {
    Uniform,
    TruncatedNormal { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ar1Block {
    /// True AR coefficient.
    pub rho: f64,
    pub gamma: f64,
    pub beta0: Vec<f64>,
    pub sigma_beta_sq: f64,
    pub g: f64,
    pub sigma_eps_sq: f64,
    /// Integrate candidates over ρ instead of fixing it at the true value.
    pub integrate_rho: bool,
    pub rho_prior: RhoPrior,
}

impl Ar1Block {
    pub fn spec(&self) -> Ar1Spec {
        Ar1Spec {
            rho: self.rho,
            gamma: self.gamma,
            beta0: self.beta0.clone(),
            sigma_beta_sq: self.sigma_beta_sq,
            g: self.g,
            sigma_eps_sq: self.sigma_eps_sq,
        }
    }

    pub fn prior(&self) -> Prior1d {
        let (lo, hi) = (-1.0 + self.gamma, 1.0 - self.gamma);
        match self.rho_prior {
            RhoPrior::Uniform => Prior1d::Uniform { lo, hi },
            RhoPrior::TruncatedNormal { mean, sd } => Prior1d::TruncatedNormal { mean, sd, lo, hi },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub p: usize,
    pub s0: SubsetMask,
    pub seed: u64,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub candidates: Candidates,
    pub covariate_bound: f64,
    pub variance_mode: VarianceMode,
    pub linear: LinearZellnerSpec,
    pub se: SeKernelSpec,
    pub ar1: Ar1Block,
    pub quadrature: QuadratureSettings,
    pub audit: AuditThresholds,
}

/// Default prior-mean coefficients: `1, -0.8, 0.6, -0.5`, then `±0.5`.
pub fn default_beta0(p: usize) -> Vec<f64> {
    let head = [1.0, -0.8, 0.6, -0.5];
    (0..p)
        .map(|j| {
            head.get(j)
                .copied()
                .unwrap_or(if j % 2 == 0 { 0.5 } else { -0.5 })
        })
        .collect()
}

/// The fully populated default document for `p` covariates.
pub fn default_document(p: usize) -> Value {
    let beta0 = default_beta0(p);
    json!({
        "family": "linear",
        "p": p,
        "s0": [],
        "seed": 0,
        "n_grid": [100, 200, 400, 800, 1600],
        "replicates": 50,
        "candidates": "all",
        "covariate_bound": 1.0,
        "variance_mode": {"kind": "known"},
        "linear": {"beta0": beta0, "sigma_beta_sq": 1.0, "g": 1.0, "sigma_eps_sq": 1.0},
        "se": {
            "sigma_f_sq": 1.0,
            "precision": vec![4.0; p],
            "mean": {"kind": "clipped_linear", "coef": beta0, "bound": 2.0},
            "sigma_eps_sq": 1.0
        },
        "ar1": {
            "rho": 0.5, "gamma": 0.1, "beta0": beta0,
            "sigma_beta_sq": 1.0, "g": 1.0, "sigma_eps_sq": 1.0,
            "integrate_rho": true, "rho_prior": {"kind": "uniform"}
        },
        "quadrature": {"nodes": 64, "max_nodes": 512, "tol": 1e-6},
        "audit": {"a1_pass": 1e-3, "a1_fail": 1e-6, "growth_ratio": 2.0}
    })
}

/// Fills for tagged objects that a user may switch to a different kind.
fn variant_defaults(path: &str, kind: &str) -> Option<Value> {
    match (path, kind) {
        ("variance_mode", "inverse_gamma") => Some(json!({"tie_process_variance": true})),
        _ => None,
    }
}

fn merge(base: &mut Value, user: Value, path: &str) -> Result<()> {
    match (base, user) {
        (Value::Object(b), Value::Object(u)) => {
            let switches_kind = matches!(
                (b.get("kind"), u.get("kind")),
                (Some(x), Some(y)) if x != y
            );
            if switches_kind {
                let kind = u["kind"].as_str().unwrap_or_default().to_string();
                let mut fresh = variant_defaults(path, &kind).unwrap_or_else(|| json!({}));
                for (k, v) in u {
                    fresh[k] = v;
                }
                *b = fresh.as_object().cloned().unwrap_or_default();
                return Ok(());
            }
            for (k, v) in u {
                let child = join(path, &k);
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &child)?,
                    None => return Err(Error::validation(child, "unknown key")),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn required<'a>(doc: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    doc.get(key)
        .ok_or_else(|| Error::validation(key, "required key is missing"))
}

/// Merges a user document onto the defaults without validating.
fn resolve_document(user: Value) -> Result<Value> {
    let obj = user
        .as_object()
        .ok_or_else(|| Error::validation("<root>", "configuration must be a JSON object"))?;
    required(obj, "family")?;
    required(obj, "s0")?;
    let p = required(obj, "p")?
        .as_u64()
        .filter(|p| (1..=MAX_P as u64).contains(p))
        .ok_or_else(|| Error::validation("p", format!("must be an integer in 1..={MAX_P}")))?;
    let mut doc = default_document(p as usize);
    merge(&mut doc, user, "")?;
    Ok(doc)
}

/// Sets `key` (a dotted path into the resolved document) to `raw`, which is
/// read as JSON when possible and as a string otherwise.
pub fn apply_override(doc: &mut Value, key: &str, raw: &str) -> Result<()> {
    let mut slot = &mut *doc;
    for part in key.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|o| o.get_mut(part))
            .ok_or_else(|| Error::validation(key, "override refers to an unknown key"))?;
    }
    *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(())
}

/// Splits `key=value`.
pub fn split_override(arg: &str) -> Result<(String, String)> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| Error::validation(arg, "override must look like key=value"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json_str_with(text, &[])
    }

    pub fn from_json_str_with(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc = resolve_document(parse_json(text)?)?;
        for (k, v) in overrides {
            apply_override(&mut doc, k, v)?;
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(doc).map_err(|e| Error::validation("<root>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str_with(&text, overrides)
    }

    /// Default experiment for a family: `p = 4`, `s0 = {1, 2}`.
    pub fn default_for(family: Family, seed: u64) -> Self {
        let doc = json!({"family": family, "p": 4, "s0": [1, 2], "seed": seed});
        Self::from_json_str(&doc.to_string()).expect("default configuration is valid")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p > MAX_P {
            return Err(Error::validation("p", format!("must be in 1..={MAX_P}")));
        }
        self.s0
            .check_within(self.p)
            .map_err(|e| Error::validation("s0", e.to_string()))?;
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(Error::validation("n_grid", "must be nonempty with positive sizes"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("n_grid", "must be strictly increasing"));
        }
        if self.replicates == 0 {
            return Err(Error::validation("replicates", "must be >= 1"));
        }
        if let Candidates::List(list) = &self.candidates {
            if list.is_empty() {
                return Err(Error::validation("candidates", "must be nonempty"));
            }
            for s in list {
                s.check_within(self.p)
                    .map_err(|e| Error::validation("candidates", e.to_string()))?;
            }
            let mut sorted = list.clone();
            sorted.sort();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::validation("candidates", "contains a duplicate subset"));
            }
        }
        if !(self.covariate_bound.is_finite() && self.covariate_bound > 0.0) {
            return Err(Error::validation("covariate_bound", "must be finite and > 0"));
        }
        if let VarianceMode::InverseGamma { alpha, beta, .. } = self.variance_mode {
            if !(alpha > 2.0 && alpha.is_finite()) {
                return Err(Error::validation(
                    "variance_mode.alpha",
                    format!("inverse-gamma shape requires alpha > 2, found {alpha}"),
                ));
            }
            check_inverse_gamma(alpha, beta)
                .map_err(|_| Error::validation("variance_mode.beta", format!("requires beta > 0, found {beta}")))?;
        }
        self.quadrature.validate()?;
        if !(self.audit.a1_fail < self.audit.a1_pass && self.audit.growth_ratio > 0.0) {
            return Err(Error::validation("audit", "needs a1_fail < a1_pass and growth_ratio > 0"));
        }
        match self.family {
            Family::Linear => self.linear.validate(self.p),
            Family::Se => self.se.validate(self.p),
            Family::Ar1 => {
                self.ar1.spec().validate(self.p)?;
                if let RhoPrior::TruncatedNormal { mean, sd } = self.ar1.rho_prior {
                    if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
                        return Err(Error::validation("ar1.rho_prior", "needs finite mean and sd > 0"));
                    }
                }
                Ok(())
            }
        }
    }

    /// The candidate list with `"all"` expanded.
    pub fn candidate_list(&self) -> Vec<SubsetMask> {
        match &self.candidates {
            Candidates::All => SubsetMask::all(self.p),
            Candidates::List(list) => list.clone(),
        }
    }

    /// Model used both to generate data and to evaluate candidates. In
    /// inverse-gamma mode with a tied process variance, the SE process
    /// variance is replaced by the error variance.
    pub fn model_spec(&self) -> ModelSpec {
        match self.family {
            Family::Linear => ModelSpec::Linear(self.linear.clone()),
            Family::Se => {
                let mut se = self.se.clone();
                if let VarianceMode::InverseGamma {
                    tie_process_variance: true,
                    ..
                } = self.variance_mode
                {
                    se.sigma_f_sq = se.sigma_eps_sq;
                }
                ModelSpec::Se(se)
            }
            Family::Ar1 => ModelSpec::Ar1(self.ar1.spec()),
        }
    }
}
