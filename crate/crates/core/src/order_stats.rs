//! Expected order statistics of the Logistic law and the sampling error of the expected
//! empirical CDF they induce.
//!
//! For `x₁..x_N ~ Logistic(A, B)`, `E[x₍ᵢ₎] = B·(H_{i−1} − H_{N−i}) + A`. The step function
//! `F̄(t) = #{i : E[x₍ᵢ₎] ≤ t}/N` has zero variance, so the sampling error is all bias:
//!
//! ```text
//! S_e = 1/(E[x₍N₎] − E[x₍₁₎]) · Σᵢ₌₁^{N−1} ∫_{E[x₍ᵢ₎]}^{E[x₍ᵢ₊₁₎]} (F(t) − i/N)² dt
//! ```
//!
//! evaluated with `∫F = B·ln(1 + e^{(t−A)/B})` and `∫F² = ∫F − B·F`.

use serde::{Deserialize, Serialize};

use crate::dist::DistSpec;
use crate::error::{Error, Result};
use crate::special::{harmonic_table, sigmoid, softplus, CompensatedSum};

fn check_scale(b: f64) -> Result<()> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::domain(format!("scale must be positive, got {b}")));
    }
    Ok(())
}

/// `E[x₍ᵢ₎]` for a sample of size `n` from `Logistic(a, b)` (1-based `i`).
pub fn order_stat_expectation(n: usize, i: usize, a: f64, b: f64) -> Result<f64> {
    check_scale(b)?;
    if n == 0 || i == 0 || i > n {
        return Err(Error::domain(format!("order index {i} outside 1..={n}")));
    }
    let h = harmonic_table(n);
    Ok(b * (h[i - 1] - h[n - i]) + a)
}

/// All `N` expected order statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStatTable {
    pub n: usize,
    pub dist: DistSpec,
    pub expectations: Vec<f64>,
}

impl OrderStatTable {
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self> {
        check_scale(b)?;
        if n == 0 {
            return Err(Error::domain("order statistics need n >= 1"));
        }
        let h = harmonic_table(n);
        let expectations = (1..=n).map(|i| b * (h[i - 1] - h[n - i]) + a).collect();
        Ok(Self { n, dist: DistSpec::logistic(a, b)?, expectations })
    }

    /// `F̄(t) = #{i : E[x₍ᵢ₎] ≤ t} / N`.
    pub fn expected_ecdf(&self, t: f64) -> f64 {
        let count = self.expectations.partition_point(|&e| e <= t);
        count as f64 / self.n as f64
    }
}

/// `F̄(t)` for `Logistic(a, b)` at sample size `n`.
pub fn empirical_cdf_expectation(n: usize, a: f64, b: f64, t: f64) -> Result<f64> {
    Ok(OrderStatTable::new(n, a, b)?.expected_ecdf(t))
}

/// Sampling error with its bias/variance split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingErrorReport {
    pub n: usize,
    pub s_e: f64,
    pub bias: f64,
    pub variance: f64,
}

/// `S_e` for sample size `n`, with `t` uniform on `[E[x₍₁₎], E[x₍N₎]]`.
pub fn sampling_error(n: usize, a: f64, b: f64) -> Result<SamplingErrorReport> {
    if n < 2 {
        return Err(Error::domain(format!("sampling error needs n >= 2, got {n}")));
    }
    let table = OrderStatTable::new(n, a, b)?;
    let e = &table.expectations;
    let mut total = CompensatedSum::default();
    for i in 1..n {
        total.add(segment_integral(e[i - 1], e[i], i as f64 / n as f64, a, b));
    }
    let s_e = total.value() / (e[n - 1] - e[0]);
    Ok(SamplingErrorReport { n, s_e, bias: s_e, variance: 0.0 })
}

/// `∫_lo^hi (F(t) − c)² dt` for the Logistic(a, b) CDF via its antiderivative
/// `G(t) = (1 − 2c)·B·softplus(z) − B·F(t) + c²·t`, `z = (t − a)/b`.
fn segment_integral(lo: f64, hi: f64, c: f64, a: f64, b: f64) -> f64 {
    let (zl, zh) = ((lo - a) / b, (hi - a) / b);
    // evaluate differences term by term to limit cancellation
    let d_softplus = softplus(zh) - softplus(zl);
    let d_f = sigmoid(zh) - sigmoid(zl);
    (1.0 - 2.0 * c) * b * d_softplus - b * d_f + c * c * (hi - lo)
}
