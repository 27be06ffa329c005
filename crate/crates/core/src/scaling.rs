//! Expected Bellman error under proportional reward scaling.
//!
//! With next-state rewards `r₁..r_n` and Logistic scale β, the Bellman error has location
//! `−β·ln Σ e^{rᵢ/β}`. Scaling rewards by φ gives
//! `E[ε](φ) = −β·ln G(φ)`, `G(φ) = Σ e^{φ·rᵢ/β}`.
//! When some reward is positive and `Σ rᵢ e^{rᵢ/β} < 0`, `G` has a unique minimizer φ* > 1
//! and `E[ε]` rises on `[1, φ*]` and falls afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::log_sum_exp;

/// Rewards reachable from one successor state and the error scale β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSample {
    rewards: Vec<f64>,
    beta: f64,
}

impl RewardSample {
    pub fn new(rewards: Vec<f64>, beta: f64) -> Result<Self> {
        if rewards.is_empty() {
            return Err(Error::domain("reward sample is empty"));
        }
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::domain("rewards must be finite"));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::domain(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { rewards, beta })
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Counts of positive, negative and zero rewards.
    pub fn sign_counts(&self) -> (usize, usize, usize) {
        let pos = self.rewards.iter().filter(|&&r| r > 0.0).count();
        let neg = self.rewards.iter().filter(|&&r| r < 0.0).count();
        (pos, neg, self.rewards.len() - pos - neg)
    }

    /// Sign of `G′(φ)`, computed with the largest exponent factored out.
    fn gprime_sign(&self, phi: f64) -> f64 {
        let m = self
            .rewards
            .iter()
            .map(|r| phi * r / self.beta)
            .fold(f64::NEG_INFINITY, f64::max);
        self.rewards
            .iter()
            .map(|r| r * (phi * r / self.beta - m).exp())
            .sum()
    }
}

/// `E[ε](φ) = −β·logsumexp(φ·r/β)`.
pub fn expected_error(sample: &RewardSample, phi: f64) -> Result<f64> {
    if !(phi > 0.0) {
        return Err(Error::domain(format!("scaling ratio must be positive, got {phi}")));
    }
    let b = sample.beta;
    let scaled: Vec<f64> = sample.rewards.iter().map(|r| phi * r / b).collect();
    Ok(-b * log_sum_exp(&scaled))
}

/// The two sufficient conditions for an interior optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConditions {
    /// at least one positive reward
    pub cond1: bool,
    /// `G′(1) < 0`
    pub cond2: bool,
    /// `Σ_{r≠0} e^{r/β}·r`
    pub gprime1: f64,
}

pub fn check_conditions(sample: &RewardSample) -> ScalingConditions {
    let (pos, _, _) = sample.sign_counts();
    let gprime1: f64 = sample
        .rewards
        .iter()
        .filter(|&&r| r != 0.0)
        .map(|r| (r / sample.beta).exp() * r)
        .sum();
    ScalingConditions { cond1: pos != 0, cond2: gprime1 < 0.0, gprime1 }
}

const ROOT_TOL: f64 = 1e-10;
const BISECT_MAX: usize = 200;

/// Root φ* > 1 of `G′(φ) = Σ rᵢ e^{φ·rᵢ/β}`.
///
/// `G′` is strictly increasing, negative at 1 and eventually positive, so doubling the right
/// end of `[1, 2]` brackets the root and bisection finishes.
pub fn find_phi_star(sample: &RewardSample) -> Result<f64> {
    let c = check_conditions(sample);
    if !c.cond1 {
        return Err(Error::Precondition("no positive reward (i1 = 0)".into()));
    }
    if !c.cond2 {
        return Err(Error::Precondition(format!(
            "G'(1) = {} is not negative",
            c.gprime1
        )));
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    while sample.gprime_sign(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numeric("could not bracket the optimal scaling ratio".into()));
        }
    }
    for _ in 0..BISECT_MAX {
        let mid = 0.5 * (lo + hi);
        if sample.gprime_sign(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= ROOT_TOL * 0.5 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One evaluated point of a scaling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub phi: f64,
    pub expected_error: f64,
    /// `φ ≥ 1`, the range the optimality statement covers
    pub in_admissible_range: bool,
}

/// Expected error over a φ grid together with the conditions and φ*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub sample: RewardSample,
    pub points: Vec<ScalingPoint>,
    pub phi_star: Option<f64>,
    pub cond1: bool,
    pub cond2: bool,
}

pub fn scaling_curve(sample: &RewardSample, phi_grid: &[f64]) -> Result<ScalingCurve> {
    if phi_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("phi grid must be strictly increasing"));
    }
    let points = phi_grid
        .iter()
        .map(|&phi| {
            Ok(ScalingPoint { phi, expected_error: expected_error(sample, phi)?, in_admissible_range: phi >= 1.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    let c = check_conditions(sample);
    let phi_star = if c.cond1 && c.cond2 { Some(find_phi_star(sample)?) } else { None };
    Ok(ScalingCurve { sample: sample.clone(), points, phi_star, cond1: c.cond1, cond2: c.cond2 })
}

/// `n` evenly spaced points on `[lo, hi]` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(hi > lo) {
        return Err(Error::domain(format!("bad grid {lo}:{hi}:{n}")));
    }
    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
}
