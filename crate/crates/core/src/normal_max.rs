//! Finite-N Gumbel approximation of the maximum of N i.i.d. standard Normals.
//!
//! The Normal law is the ν = 2 member of the family with density
//! `∝ exp(−C·|x|^ν)`. From ν one derives θ = ν − 1, C, D₀, D₁, D₂ and the scale
//! `β_N = (θ/(νC))·W₀[(νC/θ)(D₀N)^{ν/θ}]^{1/ν}`; `a_N` and `b_N` are truncated series in
//! `1/β_N`. Then `max(X₁..X_N) ≈ Gumbel(b_N, a_N)`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::DistSpec;
use crate::error::{Error, Result};
use crate::fit::{ks_sorted, KsMode};
use crate::rng;
use crate::special::norm_cdf;

pub use crate::special::{gamma_fn, lambert_w0};

/// Intermediate constants of the approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intermediates {
    pub theta: f64,
    pub c: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub beta_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalMaxParams {
    pub n: u64,
    pub nu: f64,
    pub a_n: f64,
    pub b_n: f64,
    pub intermediates: Intermediates,
}

impl NormalMaxParams {
    /// The approximating law `Gumbel(b_N, a_N)`.
    pub fn gumbel(&self) -> Result<DistSpec> {
        DistSpec::gumbel(self.b_n, self.a_n)
    }
}

/// Constants for exponent ν and sample size n, with both series truncated after the
/// `β⁻⁶` terms.
pub fn exp_family_max_gumbel(n: u64, nu: f64) -> Result<NormalMaxParams> {
    if n < 2 {
        return Err(Error::domain(format!("need N >= 2, got {n}")));
    }
    if !(nu > 1.0) {
        return Err(Error::domain(format!("need nu > 1, got {nu}")));
    }
    let theta = nu - 1.0;
    let g1 = gamma_fn(1.0 / nu)?;
    let g3 = gamma_fn(3.0 / nu)?;
    let c = (g3 / g1).powf(nu / 2.0);
    let d0 = c.powf((1.0 - nu) / nu) / (2.0 * g1);
    let w = lambert_w0(nu * c / theta * (d0 * n as f64).powf(nu / theta))?;
    let beta = theta / (nu * c) * w.powf(1.0 / nu);
    let d1 = -(1.0 - 1.0 / nu) / c;
    let d2 = (1.0 - 1.0 / nu) * (2.0 - 1.0 / nu) / (c * c);

    let b2 = beta * beta;
    let b4 = b2 * b2;
    let b6 = b4 * b2;
    let a_n = 1.0 / (2.0 * c * beta)
        * (1.0 - theta / (2.0 * c * b2) + (theta * theta - 6.0 * c * d1) / (4.0 * c * c * b4)
            - (2.0 * theta.powi(3) - 32.0 * theta * c * d1 - 20.0 * c * c * (d1 * d1 - 2.0 * d2))
                / (16.0 * c.powi(3) * b6));
    let b_n = beta
        * (1.0 + d1 / (2.0 * c * b4)
            - (2.0 * theta * d1 + 2.0 * c * (d1 * d1 - 2.0 * d2)) / (16.0 * c.powi(3) * b6));
    if !(a_n > 0.0) {
        return Err(Error::Numeric(format!(
            "series for a_N is not positive at N={n} (beta_N={beta}); the expansion needs larger N"
        )));
    }
    Ok(NormalMaxParams {
        n,
        nu,
        a_n,
        b_n,
        intermediates: Intermediates { theta, c, d0, d1, d2, beta_n: beta },
    })
}

/// The ν = 2 (standard Normal) case.
pub fn normal_max_gumbel(n: u64) -> Result<NormalMaxParams> {
    exp_family_max_gumbel(n, 2.0)
}

/// Exact CDF of the maximum of `n` standard Normals, `Φ(x)ⁿ`.
pub fn max_of_normals_cdf(n: u64, x: f64) -> f64 {
    norm_cdf(x).powf(n as f64)
}

/// `replicates` maxima of `n` standard Normal draws (ziggurat sampler), sorted ascending.
///
/// Replicate `k` draws from stream `k` of `seed`.
pub fn sample_max_of_normals(n: u64, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 || replicates == 0 {
        return Err(Error::domain("need n >= 1 and at least one replicate"));
    }
    let mut out: Vec<f64> = (0..replicates as u64)
        .map(|k| {
            let mut r = rng::stream(seed, k);
            (0..n).map(|_| StandardNormal.sample(&mut r)).fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Monte Carlo KS distance between simulated maxima and `Gumbel(b_N, a_N)`.
pub fn monte_carlo_ks(n: u64, replicates: usize, seed: u64) -> Result<f64> {
    let law = normal_max_gumbel(n)?.gumbel()?;
    let maxima = sample_max_of_normals(n, replicates, seed)?;
    Ok(ks_sorted(&maxima, |x| law.cdf(x), KsMode::TwoSided))
}

/// KS distance between the exact law `Φ(x)ⁿ` and `Gumbel(b_N, a_N)`, on a fine grid.
pub fn exact_ks(n: u64) -> Result<f64> {
    let law = normal_max_gumbel(n)?.gumbel()?;
    let (lo, hi) = (-6.0, 12.0);
    let steps = 200_000;
    Ok((0..=steps)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / steps as f64;
            (max_of_normals_cdf(n, x) - law.cdf(x)).abs()
        })
        .fold(0.0, f64::max))
}
