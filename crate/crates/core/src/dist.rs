//! Gumbel, Logistic and Normal laws: density, CDF, quantile, sampling and maximum
//! likelihood fitting.
//!
//! All three are location-scale families. Gumbel here is the right-skewed (maximum) law
//! with CDF `exp(−e^{−z})`, `z = (x − λ)/η`.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::special::{self, EULER_GAMMA};

/// Distribution family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gumbel,
    Logistic,
    Normal,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Gumbel, Family::Logistic, Family::Normal];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Gumbel => "gumbel",
            Family::Logistic => "logistic",
            Family::Normal => "normal",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gumbel" => Ok(Family::Gumbel),
            "logistic" => Ok(Family::Logistic),
            "normal" => Ok(Family::Normal),
            other => Err(Error::Parse(format!("unknown family `{other}`"))),
        }
    }
}

/// A member of one of the three families.
///
/// `location` is λ (Gumbel), the mean (Logistic, Normal); `scale` is η or the standard
/// deviation and is always strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct DistSpec {
    family: Family,
    location: f64,
    scale: f64,
}

#[derive(Deserialize)]
struct RawSpec {
    family: Family,
    location: f64,
    scale: f64,
}

impl TryFrom<RawSpec> for DistSpec {
    type Error = Error;

    fn try_from(r: RawSpec) -> Result<Self> {
        DistSpec::new(r.family, r.location, r.scale)
    }
}

impl DistSpec {
    pub fn new(family: Family, location: f64, scale: f64) -> Result<Self> {
        if !location.is_finite() {
            return Err(Error::domain(format!("location must be finite, got {location}")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::domain(format!("scale must be positive and finite, got {scale}")));
        }
        Ok(Self { family, location, scale })
    }

    pub fn gumbel(location: f64, scale: f64) -> Result<Self> {
        Self::new(Family::Gumbel, location, scale)
    }

    pub fn logistic(location: f64, scale: f64) -> Result<Self> {
        Self::new(Family::Logistic, location, scale)
    }

    pub fn normal(mean: f64, std_dev: f64) -> Result<Self> {
        Self::new(Family::Normal, mean, std_dev)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    fn z(&self, x: f64) -> f64 {
        (x - self.location) / self.scale
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = self.z(x);
        let s = self.scale;
        match self.family {
            Family::Gumbel => {
                let e = (-z).exp();
                if e.is_infinite() {
                    0.0
                } else {
                    (-(z + e)).exp() / s
                }
            }
            Family::Logistic => {
                // symmetric form e^{−|z|}/(1+e^{−|z|})²
                let e = (-z.abs()).exp();
                e / ((1.0 + e) * (1.0 + e) * s)
            }
            Family::Normal => (-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * s),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = self.z(x);
        let ln_s = self.scale.ln();
        match self.family {
            Family::Gumbel => -ln_s - z - (-z).exp(),
            Family::Logistic => -ln_s - z - 2.0 * special::softplus(-z),
            Family::Normal => -ln_s - 0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let z = self.z(x);
        match self.family {
            Family::Gumbel => (-(-z).exp()).exp(),
            Family::Logistic => special::sigmoid(z),
            Family::Normal => special::norm_cdf(z),
        }
    }

    /// Inverse CDF for `p ∈ (0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile needs p in (0, 1), got {p}")));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        let z = match self.family {
            Family::Gumbel => -(-p.ln()).ln(),
            Family::Logistic => p.ln() - (-p).ln_1p(),
            Family::Normal => special::norm_quantile(p),
        };
        self.location + self.scale * z
    }

    pub fn mean(&self) -> f64 {
        match self.family {
            Family::Gumbel => self.location + self.scale * EULER_GAMMA,
            Family::Logistic | Family::Normal => self.location,
        }
    }

    pub fn std_dev(&self) -> f64 {
        let pi = std::f64::consts::PI;
        match self.family {
            Family::Gumbel => self.scale * pi / 6f64.sqrt(),
            Family::Logistic => self.scale * pi / 3f64.sqrt(),
            Family::Normal => self.scale,
        }
    }

    /// `n` inverse-CDF draws keyed by `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        if n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        let mut rng = rng::stream(seed, 0);
        let values = (0..n)
            .map(|_| self.quantile_unchecked(rng::open01(&mut rng)))
            .collect();
        Ok(SampleBatch { values, seed: Some(seed) })
    }

    pub fn log_likelihood(&self, data: &[f64]) -> f64 {
        data.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.family, self.location, self.scale)
    }
}

/// A batch of finite observations, optionally tagged with the seed that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    values: Vec<f64>,
    seed: Option<u64>,
}

impl SampleBatch {
    pub fn new(values: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("sample batch is empty"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("sample batch contains non-finite value {bad}")));
        }
        Ok(Self { values, seed })
    }

    /// External data without a generating seed.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, None)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population standard deviation (divisor n).
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / self.values.len() as f64).sqrt()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Single-column CSV with header `value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wtr.write_record(["value"])?;
        for v in &self.values {
            wtr.write_record([format_float(*v)])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Read a CSV with a `value` column (other columns are ignored).
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        Self::read_csv_column(r, "value")
    }

    /// Read one named numeric column of a CSV.
    pub fn read_csv_column<R: Read>(r: R, column: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let col = headers
            .iter()
            .position(|h| h.trim() == column)
            .ok_or_else(|| Error::Parse(format!("CSV has no `{column}` column")))?;
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = rec.get(col).unwrap_or("").trim();
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("bad value `{field}`")))?;
            values.push(v);
        }
        Self::from_values(values)
    }
}

/// Shortest round-trip representation.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// Maximum likelihood fit of `family` to `data`.
///
/// Normal uses the closed form (mean, population std). Gumbel and Logistic run damped
/// Newton on the log-likelihood from a moment-matched start; every accepted step increases
/// the likelihood, so the result is never worse than the initializer.
pub fn fit_mle(family: Family, data: &SampleBatch) -> Result<DistSpec> {
    let xs = data.values();
    let first = xs[0];
    if xs.len() < 2 || xs.iter().all(|&x| x == first) {
        return Err(Error::DegenerateData(format!(
            "need at least two distinct values to fit {family}"
        )));
    }
    let mean = data.mean();
    let sd = data.std_dev();
    let pi = std::f64::consts::PI;
    match family {
        Family::Normal => DistSpec::normal(mean, sd),
        Family::Logistic => {
            let init = DistSpec::logistic(mean, sd * 3f64.sqrt() / pi)?;
            newton_location_scale(init, xs)
        }
        Family::Gumbel => {
            let scale = sd * 6f64.sqrt() / pi;
            let init = DistSpec::gumbel(mean - EULER_GAMMA * scale, scale)?;
            newton_location_scale(init, xs)
        }
    }
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 200;

/// Derivatives of the standardized log-density `ℓ(z)`: returns `(ℓ'(z), ℓ''(z))`.
fn standardized_derivs(family: Family, z: f64) -> (f64, f64) {
    match family {
        Family::Gumbel => {
            let e = (-z).exp();
            (e - 1.0, -e)
        }
        Family::Logistic => {
            let s = special::sigmoid(z);
            (1.0 - 2.0 * s, -2.0 * s * (1.0 - s))
        }
        Family::Normal => (-z, -1.0),
    }
}

fn newton_location_scale(init: DistSpec, xs: &[f64]) -> Result<DistSpec> {
    let family = init.family;
    let n = xs.len() as f64;
    let mut mu = init.location;
    let mut s = init.scale;
    let mut ll = init.log_likelihood(xs);

    for _ in 0..NEWTON_MAX_ITER {
        // gradient and Hessian in (μ, s)
        let (mut g_mu, mut g_s) = (0.0, -n / s);
        let (mut h_mm, mut h_ms, mut h_ss) = (0.0, 0.0, n / (s * s));
        for &x in xs {
            let z = (x - mu) / s;
            let (d1, d2) = standardized_derivs(family, z);
            g_mu -= d1 / s;
            g_s -= d1 * z / s;
            h_mm += d2 / (s * s);
            h_ms += (d2 * z + d1) / (s * s);
            h_ss += (d2 * z * z + 2.0 * d1 * z) / (s * s);
        }
        let det = h_mm * h_ss - h_ms * h_ms;
        // Newton direction when the Hessian is negative definite, gradient ascent otherwise.
        let (mut d_mu, mut d_s) = if h_mm < 0.0 && det > 0.0 {
            (-(h_ss * g_mu - h_ms * g_s) / det, -(-h_ms * g_mu + h_mm * g_s) / det)
        } else {
            (g_mu * s * s / n, g_s * s * s / n)
        };

        let mut accepted = false;
        for _ in 0..60 {
            let s_new = s + d_s;
            if s_new > 0.0 {
                let cand = DistSpec { family, location: mu + d_mu, scale: s_new };
                let ll_new = cand.log_likelihood(xs);
                if ll_new.is_finite() && ll_new >= ll {
                    mu = cand.location;
                    s = s_new;
                    ll = ll_new;
                    accepted = true;
                    break;
                }
            }
            d_mu *= 0.5;
            d_s *= 0.5;
        }
        let step = d_mu.abs().max(d_s.abs());
        if !accepted || step < NEWTON_TOL * (1.0 + mu.abs().max(s)) {
            return DistSpec::new(family, mu, s);
        }
    }
    DistSpec::new(family, mu, s)
}
