//! Goodness-of-fit battery: Kolmogorov–Smirnov statistic, binned density errors and a
//! family ranking built on maximum likelihood fits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::{fit_mle, DistSpec, Family, SampleBatch};
use crate::error::{Error, Result};

/// How the KS distance is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KsMode {
    /// `maxᵢ max(|i/n − F(x₍ᵢ₎)|, |(i−1)/n − F(x₍ᵢ₎)|)`.
    #[default]
    TwoSided,
    /// `maxᵢ |i/n − F(x₍ᵢ₎)|`: the empirical CDF is only compared at the data points.
    #[serde(rename = "paper")]
    DataPoints,
}

impl fmt::Display for KsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KsMode::TwoSided => "two-sided",
            KsMode::DataPoints => "paper",
        })
    }
}

impl std::str::FromStr for KsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" => Ok(KsMode::TwoSided),
            "paper" => Ok(KsMode::DataPoints),
            other => Err(Error::Parse(format!("unknown KS mode `{other}`"))),
        }
    }
}

/// KS distance of `data` from `d`.
pub fn ks_statistic(data: &SampleBatch, d: &DistSpec, mode: KsMode) -> f64 {
    ks_sorted(&data.sorted(), |x| d.cdf(x), mode)
}

/// KS distance for already sorted values against an arbitrary CDF.
pub fn ks_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F, mode: KsMode) -> f64 {
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let upper = (i + 1) as f64 / n;
        worst = worst.max((upper - f).abs());
        if mode == KsMode::TwoSided {
            worst = worst.max((f - i as f64 / n).abs());
        }
    }
    worst
}

/// Binning rule for the histogram metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BinRule {
    Fixed(usize),
    FreedmanDiaconis,
}

impl Default for BinRule {
    fn default() -> Self {
        BinRule::Fixed(DEFAULT_BINS)
    }
}

pub const DEFAULT_BINS: usize = 50;

/// Density-histogram errors against a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramMetrics {
    pub sse: f64,
    pub rmse: f64,
    pub r2: f64,
    pub n_bins: usize,
}

/// Compare density-normalized histogram heights on `[min, max]` with the model density at
/// bin centers.
pub fn histogram_fit_metrics(data: &SampleBatch, d: &DistSpec, n_bins: usize) -> Result<HistogramMetrics> {
    if n_bins < 2 {
        return Err(Error::domain(format!("need at least 2 bins, got {n_bins}")));
    }
    let xs = data.values();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::DegenerateData("histogram needs data with spread".into()));
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &x in xs {
        let k = (((x - lo) / width) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let norm = 1.0 / (xs.len() as f64 * width);
    let heights: Vec<f64> = counts.iter().map(|&c| c as f64 * norm).collect();
    let mean_h = heights.iter().sum::<f64>() / n_bins as f64;
    let mut sse = 0.0;
    let mut sst = 0.0;
    for (k, h) in heights.iter().enumerate() {
        let center = lo + (k as f64 + 0.5) * width;
        let r = h - d.pdf(center);
        sse += r * r;
        sst += (h - mean_h) * (h - mean_h);
    }
    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { f64::NEG_INFINITY };
    Ok(HistogramMetrics { sse, rmse: (sse / n_bins as f64).sqrt(), r2, n_bins })
}

/// Freedman–Diaconis bin count, clamped to `[2, 10 000]`.
pub fn freedman_diaconis_bins(data: &SampleBatch) -> usize {
    let s = data.sorted();
    let q = |p: f64| {
        let pos = p * (s.len() - 1) as f64;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if i + 1 < s.len() {
            s[i] * (1.0 - frac) + s[i + 1] * frac
        } else {
            s[i]
        }
    };
    let iqr = q(0.75) - q(0.25);
    let range = s[s.len() - 1] - s[0];
    if !(iqr > 0.0) || !(range > 0.0) {
        return 2;
    }
    let h = 2.0 * iqr / (s.len() as f64).cbrt();
    ((range / h).ceil() as usize).clamp(2, 10_000)
}

/// One fitted family with all metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub family: Family,
    pub params: DistSpec,
    pub ks: f64,
    pub sse: f64,
    pub rmse: f64,
    pub r2: f64,
    pub n_bins: usize,
    pub n_samples: usize,
}

/// Options for [`rank_families`].
#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    pub bins: BinRule,
    pub ks_mode: KsMode,
}

/// Fit and score one family.
pub fn fit_report(data: &SampleBatch, family: Family, opts: FitOptions) -> Result<FitReport> {
    let params = fit_mle(family, data)?;
    let n_bins = match opts.bins {
        BinRule::Fixed(n) => n,
        BinRule::FreedmanDiaconis => freedman_diaconis_bins(data),
    };
    let h = histogram_fit_metrics(data, &params, n_bins)?;
    Ok(FitReport {
        family,
        params,
        ks: ks_statistic(data, &params, opts.ks_mode),
        sse: h.sse,
        rmse: h.rmse,
        r2: h.r2,
        n_bins,
        n_samples: data.len(),
    })
}

/// Fit all three families and sort ascending by KS distance.
pub fn rank_families(data: &SampleBatch, opts: FitOptions) -> Result<Vec<FitReport>> {
    let mut out = Family::ALL
        .iter()
        .map(|&fam| fit_report(data, fam, opts))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.ks.total_cmp(&b.ks));
    Ok(out)
}

/// CSV summary with one row per family, columns `family,location,scale,ks,sse,rmse,r2,n_bins,n_samples`.
pub fn write_summary_csv<W: std::io::Write>(reports: &[FitReport], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record(["family", "location", "scale", "ks", "sse", "rmse", "r2", "n_bins", "n_samples"])?;
    for r in reports {
        wtr.write_record([
            r.family.to_string(),
            format!("{:?}", r.params.location()),
            format!("{:?}", r.params.scale()),
            format!("{:?}", r.ks),
            format!("{:?}", r.sse),
            format!("{:?}", r.rmse),
            format!("{:?}", r.r2),
            r.n_bins.to_string(),
            r.n_samples.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic01() -> DistSpec {
        DistSpec::logistic(0.0, 1.0).unwrap()
    }

    #[test]
    fn evenly_spread_quantiles_give_half_over_n() {
        let d = DistSpec::gumbel(0.5, 2.0).unwrap();
        let n = 40;
        let xs: Vec<f64> = (1..=n).map(|i| d.quantile((i as f64 - 0.5) / n as f64).unwrap()).collect();
        let ks = ks_statistic(&SampleBatch::from_values(xs).unwrap(), &d, KsMode::TwoSided);
        assert!((ks - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn single_point_at_median() {
        let b = SampleBatch::from_values(vec![0.0]).unwrap();
        assert_eq!(ks_statistic(&b, &logistic01(), KsMode::TwoSided), 0.5);
        assert_eq!(ks_statistic(&b, &logistic01(), KsMode::DataPoints), 0.5);
    }

    #[test]
    fn large_self_sample_is_close() {
        let b = logistic01().sample(100_000, 77).unwrap();
        assert!(ks_statistic(&b, &logistic01(), KsMode::TwoSided) < 0.01);
    }

    #[test]
    fn two_sided_dominates_data_point_mode() {
        for seed in 0..20 {
            let b = DistSpec::normal(0.3, 1.2).unwrap().sample(37, seed).unwrap();
            let m = logistic01();
            assert!(ks_statistic(&b, &m, KsMode::TwoSided) >= ks_statistic(&b, &m, KsMode::DataPoints));
        }
    }

    #[test]
    fn affine_invariance() {
        let b = DistSpec::gumbel(0.0, 1.0).unwrap().sample(500, 3).unwrap();
        let m = DistSpec::logistic(0.4, 1.3).unwrap();
        let (c, k) = (-7.0, 2.5);
        let moved = SampleBatch::from_values(b.values().iter().map(|x| k * x + c).collect()).unwrap();
        let m2 = DistSpec::logistic(k * 0.4 + c, k * 1.3).unwrap();
        let a = ks_statistic(&b, &m, KsMode::TwoSided);
        let bb = ks_statistic(&moved, &m2, KsMode::TwoSided);
        assert!((a - bb).abs() < 1e-12);
    }

    #[test]
    fn histogram_of_exact_law_has_r2_near_one() {
        let d = DistSpec::gumbel(1.0, 0.7).unwrap();
        let b = d.sample(1_000_000, 5).unwrap();
        let h = histogram_fit_metrics(&b, &d, 50).unwrap();
        assert!(h.r2 > 0.99, "{h:?}");
        assert!((h.rmse - (h.sse / 50.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn uniform_data_scores_worse_than_logistic_data() {
        let n = 20_000;
        let uni: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * (i as f64 + 0.5) / n as f64).collect();
        let uni = SampleBatch::from_values(uni).unwrap();
        let m = logistic01();
        let good = histogram_fit_metrics(&m.sample(n, 9).unwrap(), &m, 50).unwrap();
        let bad = histogram_fit_metrics(&uni, &m, 50).unwrap();
        assert!(bad.r2 < good.r2 - 0.2, "{bad:?} vs {good:?}");
    }

    #[test]
    fn bins_change_sse_but_not_ks() {
        let b = logistic01().sample(5000, 1).unwrap();
        let m = logistic01();
        let h50 = histogram_fit_metrics(&b, &m, 50).unwrap();
        let h100 = histogram_fit_metrics(&b, &m, 100).unwrap();
        assert_ne!(h50.sse, h100.sse);
        let k1 = fit_report(&b, Family::Logistic, FitOptions { bins: BinRule::Fixed(50), ..Default::default() }).unwrap();
        let k2 = fit_report(&b, Family::Logistic, FitOptions { bins: BinRule::Fixed(100), ..Default::default() }).unwrap();
        assert_eq!(k1.ks, k2.ks);
    }

    #[test]
    fn histogram_errors() {
        let b = SampleBatch::from_values(vec![1.0; 5]).unwrap();
        assert!(matches!(histogram_fit_metrics(&b, &logistic01(), 10), Err(Error::DegenerateData(_))));
        let b = SampleBatch::from_values(vec![1.0, 2.0]).unwrap();
        assert!(histogram_fit_metrics(&b, &logistic01(), 1).is_err());
    }

    #[test]
    fn ranking_picks_generating_family() {
        let b = logistic01().sample(100_000, 31).unwrap();
        let r = rank_families(&b, FitOptions::default()).unwrap();
        assert_eq!(r[0].family, Family::Logistic);
        let b = DistSpec::gumbel(0.0, 1.0).unwrap().sample(100_000, 32).unwrap();
        let r = rank_families(&b, FitOptions::default()).unwrap();
        assert_eq!(r[0].family, Family::Gumbel);
        assert!(r.windows(2).all(|w| w[0].ks <= w[1].ks));
    }

    #[test]
    fn freedman_diaconis_is_reasonable() {
        let b = DistSpec::normal(0.0, 1.0).unwrap().sample(10_000, 2).unwrap();
        let k = freedman_diaconis_bins(&b);
        assert!((30..200).contains(&k), "{k}");
    }
}
