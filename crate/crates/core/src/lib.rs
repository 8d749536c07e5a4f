//! Bayes factor asymptotics for Gaussian-process covariate selection.
//!
//! The crate builds Gaussian marginals for three model families, evaluates
//! (integrated) Bayes factors between covariate subsets, checks the working
//! assumptions that drive their asymptotic rates, and simulates trajectories
//! of `log BF / n` along a growing sample size.

pub mod audit;
pub mod cli;
pub mod config;
pub mod error;
pub mod linalg;
pub mod marginal;
pub mod model;
pub mod quadrature;
pub mod report;
pub mod sim;

pub use error::{Error, ErrorClass, Result};

/// Round-trippable scientific notation used in every output file.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}
