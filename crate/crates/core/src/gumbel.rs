//! Closed-form Gumbel algebra and the KL bound between a Gumbel law and its γ-contraction.
//!
//! * `k·X + c` of a Gumbel is Gumbel ([`gumbel_shift_scale`]).
//! * the maximum of independent equal-scale Gumbels is Gumbel ([`gumbel_max`]).
//! * the difference of two independent equal-scale Gumbels is Logistic ([`gumbel_difference`]).
//! * [`kl_bound`] bounds `KL(Gumbel(γa, γb) ‖ Gumbel(a, b))` in terms of the log-sum-exp
//!   aggregate `A*`; [`kl_numeric`] evaluates the same divergence by quadrature.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::dist::{DistSpec, Family};
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::special::{log_sum_exp, EULER_GAMMA};

const SCALE_REL_TOL: f64 = 1e-12;

fn require_gumbel(d: &DistSpec, what: &str) -> Result<()> {
    if d.family() != Family::Gumbel {
        return Err(Error::domain(format!("{what} must be Gumbel, got {}", d.family())));
    }
    Ok(())
}

/// Law of `k·X + c` for `X ~ Gumbel(λ, η)`: `Gumbel(kλ + c, kη)`.
pub fn gumbel_shift_scale(x: &DistSpec, c: f64, k: f64) -> Result<DistSpec> {
    require_gumbel(x, "input")?;
    if !(k > 0.0) {
        return Err(Error::domain(format!("scale factor must be positive, got {k}")));
    }
    DistSpec::gumbel(k * x.location() + c, k * x.scale())
}

/// Law of `maxᵢ Xᵢ` for independent `Xᵢ ~ Gumbel(Cᵢ, β)`.
pub fn gumbel_max(locations: &[f64], beta: f64) -> Result<DistSpec> {
    if locations.is_empty() {
        return Err(Error::domain("gumbel_max needs at least one location"));
    }
    if !(beta > 0.0) {
        return Err(Error::domain(format!("beta must be positive, got {beta}")));
    }
    let scaled: Vec<f64> = locations.iter().map(|c| c / beta).collect();
    DistSpec::gumbel(beta * log_sum_exp(&scaled), beta)
}

/// Law of `X − Y` for independent Gumbels sharing a scale: `Logistic(C_X − C_Y, β)`.
///
/// The sum `X + Y` is not Logistic and has no counterpart here.
pub fn gumbel_difference(x: &DistSpec, y: &DistSpec) -> Result<DistSpec> {
    require_gumbel(x, "minuend")?;
    require_gumbel(y, "subtrahend")?;
    let (bx, by) = (x.scale(), y.scale());
    if (bx - by).abs() > SCALE_REL_TOL * bx.max(by) {
        return Err(Error::ScaleMismatch { left: bx, right: by });
    }
    DistSpec::logistic(x.location() - y.location(), bx)
}

/// `20/e² + 10·e^{−√e} − 1/(2e)`, the part shared by both expectation bounds.
fn bound_core() -> f64 {
    20.0 / (E * E) + 10.0 * (-(0.5f64).exp()).exp() - 1.0 / (2.0 * E)
}

/// Upper bounds on `E[e^{−X}]` and `E[X e^{−X}]` for `X ~ Gumbel(a, 1)`.
///
/// Returns `(bound_exp, bound_xexp)`.
pub fn exp_moment_bounds(a: f64) -> (f64, f64) {
    let k = bound_core() + 0.5;
    let decay = (-a).exp();
    let bound_exp = k * decay;
    let bound_xexp = if a > 0.0 { (3.0 / 20.0 + a * k) * decay } else { 3.0 / 20.0 * decay };
    (bound_exp, bound_xexp)
}

/// Which branch of the KL bound applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KlBranch {
    APositive,
    ANonpositive,
}

/// Closed-form bound next to the quadrature value of the divergence it bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlBoundReport {
    pub a_star: f64,
    pub gamma: f64,
    pub bound: f64,
    pub numeric_kl: f64,
    pub branch: KlBranch,
    /// `numeric_kl <= bound`. False when `(1 − γ)·A*` is far from small.
    pub dominated: bool,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

/// Closed-form bound alone.
pub fn kl_bound_value(a_star: f64, gamma: f64) -> Result<(f64, KlBranch)> {
    check_gamma(gamma)?;
    let kappa = 1.0 - gamma;
    let head = (1.0 / gamma).ln();
    Ok(if a_star > 0.0 {
        let coef = bound_core() - 0.5;
        (head + kappa * (a_star * coef + 3.0 / 20.0 - EULER_GAMMA), KlBranch::APositive)
    } else {
        (head + kappa * (3.0 / 20.0 - a_star - EULER_GAMMA), KlBranch::ANonpositive)
    })
}

/// Bound on `KL(Y ‖ X)` for `X ~ Gumbel(βA*, β)`, `Y ~ Gumbel(γβA*, γβ)`.
///
/// The divergence does not depend on β, so the numeric check runs at β = 1.
pub fn kl_bound(a_star: f64, gamma: f64) -> Result<KlBoundReport> {
    let (bound, branch) = kl_bound_value(a_star, gamma)?;
    let numeric_kl = kl_numeric(a_star, 1.0, gamma)?;
    Ok(KlBoundReport {
        a_star,
        gamma,
        bound,
        numeric_kl,
        branch,
        dominated: numeric_kl <= bound,
    })
}

/// `KL(Gumbel(γa, γb) ‖ Gumbel(a, b))` by adaptive Simpson in the standardized variable
/// `u = (x − γa)/(γb)` over `[−15, 40]`.
pub fn kl_numeric(a: f64, b: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(b > 0.0) {
        return Err(Error::domain(format!("scale must be positive, got {b}")));
    }
    if !a.is_finite() {
        return Err(Error::domain(format!("location must be finite, got {a}")));
    }
    let ln_ratio = (1.0 / gamma).ln();
    // Work in units of b: the divergence only depends on a/b.
    let a = a / b;
    let integrand = |u: f64| {
        let eu = (-u).exp();
        let log_q = -u - eu;
        let z = gamma * a + gamma * u - a;
        let log_p_std = -z - (-z).exp();
        // ln q(x) − ln p(x) = ln(1/γ) − u − e^{−u} + z + e^{−z}
        let diff = log_q + ln_ratio - log_p_std;
        let w = log_q.exp();
        if w == 0.0 {
            0.0
        } else {
            w * diff
        }
    };
    let coarse = adaptive_simpson(integrand, -15.0, 40.0, 1e-6)?.value;
    let tol = 1e-10 * coarse.abs().max(1.0);
    let fine = adaptive_simpson(integrand, -15.0, 40.0, tol).map_err(|e| {
        Error::Numeric(format!("KL quadrature failed for a/b={a}, gamma={gamma}: {e}"))
    })?;
    Ok(fine.value.max(0.0))
}
