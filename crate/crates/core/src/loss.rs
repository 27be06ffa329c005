//! Regression losses on Bellman errors and the softmax policy formula.
//!
//! `MSELoss = (1/N)·Σ ½εᵢ²` is the Normal negative log-likelihood with constants dropped.
//! `LLoss = (1/N)·Σ [εᵢ/σ + 2·ln(1 + e^{−εᵢ/σ})]` is the Logistic(0, σ) negative
//! log-likelihood without the `ln σ` term; it equals `ln 4 + ¼(ε/σ)² − (ε/σ)⁴/96 + …`
//! per element.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::softplus;

/// Scale of the Logistic likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    sigma: f64,
}

impl LossConfig {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { sigma: 1.0 }
    }
}

fn non_empty(errors: &[f64]) -> Result<()> {
    if errors.is_empty() {
        return Err(Error::domain("loss needs at least one error"));
    }
    Ok(())
}

/// Per-element Logistic loss `t + 2·ln(1 + e^{−t})`, even in `t`.
#[inline]
pub fn lloss_element(t: f64) -> f64 {
    // t + 2·softplus(−t) = |t| + 2·softplus(−|t|)
    let a = t.abs();
    a + 2.0 * softplus(-a)
}

pub fn mse_loss(errors: &[f64]) -> Result<f64> {
    non_empty(errors)?;
    Ok(errors.iter().map(|e| 0.5 * e * e).sum::<f64>() / errors.len() as f64)
}

pub fn mse_loss_grad(errors: &[f64]) -> Result<Vec<f64>> {
    non_empty(errors)?;
    let n = errors.len() as f64;
    Ok(errors.iter().map(|e| e / n).collect())
}

pub fn l_loss(errors: &[f64], cfg: &LossConfig) -> Result<f64> {
    non_empty(errors)?;
    let s = cfg.sigma;
    Ok(errors.iter().map(|e| lloss_element(e / s)).sum::<f64>() / errors.len() as f64)
}

/// `∂LLoss/∂εᵢ = tanh(εᵢ/(2σ)) / (Nσ)`, bounded by `1/(Nσ)`.
pub fn l_loss_grad(errors: &[f64], cfg: &LossConfig) -> Result<Vec<f64>> {
    non_empty(errors)?;
    let s = cfg.sigma;
    let n = errors.len() as f64;
    Ok(errors.iter().map(|e| (e / (2.0 * s)).tanh() / (n * s)).collect())
}

/// `|LLoss(t) − (ln 4 + t²/4)|` for a single standardized error.
pub fn taylor_gap(t: f64) -> f64 {
    (lloss_element(t) - (4f64.ln() + 0.25 * t * t)).abs()
}

/// `π(a) ∝ μ(a)·e^{Q(a)/ζ}`, normalized with the maximum subtracted.
pub fn softmax_policy(q_row: &[f64], mu_row: &[f64], zeta: f64) -> Result<Vec<f64>> {
    if q_row.len() != mu_row.len() || q_row.is_empty() {
        return Err(Error::domain("q_row and mu_row must be non-empty and equally long"));
    }
    if !(zeta > 0.0) {
        return Err(Error::domain(format!("temperature must be positive, got {zeta}")));
    }
    if mu_row.iter().any(|&m| !(m >= 0.0)) {
        return Err(Error::domain("behaviour weights must be non-negative"));
    }
    if mu_row.iter().all(|&m| m == 0.0) {
        return Err(Error::domain("behaviour weights are all zero"));
    }
    let m = q_row
        .iter()
        .zip(mu_row)
        .filter(|(_, &w)| w > 0.0)
        .map(|(q, _)| q / zeta)
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = q_row
        .iter()
        .zip(mu_row)
        .map(|(q, &mu)| if mu > 0.0 { mu * (q / zeta - m).exp() } else { 0.0 })
        .collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}
