//! Special functions used across the crate.

use statrs::function::erf;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant, the mean of a standard Gumbel law.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for `x > 0` (Lanczos, g = 7, nine coefficients).
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("gamma_fn needs x > 0, got {x}")));
    }
    Ok(gamma_lanczos(x))
}

fn gamma_lanczos(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_lanczos(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Principal branch W₀ of the Lambert W function, solving `w·e^w = x` for `x ≥ −1/e`.
///
/// Halley iteration from `ln(1 + x)` (x ≥ 0) or the branch-point series (x < 0).
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -(-1.0f64).exp();
    if x.is_nan() || x < branch {
        return Err(Error::domain(format!("lambert_w0 needs x >= -1/e, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == branch {
        return Ok(-1.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = if x >= 0.0 {
        x.ln_1p()
    } else {
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 1e-14 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 − Φ(z)`, accurate in the upper tail.
#[inline]
pub fn norm_sf(z: f64) -> f64 {
    0.5 * erf::erfc(z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile for `p ∈ (0, 1)`.
pub fn norm_quantile(p: f64) -> f64 {
    if p < 0.5 {
        -norm_isf(p)
    } else {
        norm_isf(1.0 - p)
    }
}

/// Upper-tail quantile: the `z` with `1 − Φ(z) = q`.
///
/// `erfc_inv` start polished by two Halley steps on the survival function.
pub fn norm_isf(q: f64) -> f64 {
    let mut z = std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * q);
    if !z.is_finite() {
        return z;
    }
    for _ in 0..2 {
        let dens = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if dens == 0.0 {
            break;
        }
        // f(z) = sf(z) − q, f' = −φ, f'' = zφ
        let t = (norm_sf(z) - q) / dens;
        z += t / (1.0 - 0.5 * z * t);
    }
    z
}

/// `ln(1 + e^t)` without overflow.
#[inline]
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Logistic sigmoid `1 / (1 + e^{−t})`.
#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln Σ exp(xᵢ)` with the maximum subtracted first.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Neumaier-compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Harmonic numbers `H₀..=H_n` by compensated forward summation.
pub fn harmonic_table(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = CompensatedSum::default();
    out.push(0.0);
    for k in 1..=n {
        acc.add(1.0 / k as f64);
        out.push(acc.value());
    }
    out
}
