//! Closed-form Gumbel algebra next to a quick simulation.

use bellman_error::gumbel::{gumbel_difference, gumbel_max};
use bellman_error::{ks_statistic, DistSpec, KsMode, SampleBatch};

fn main() -> bellman_error::Result<()> {
    let locations = [0.0, 0.5, -1.0, 2.0];
    let beta = 0.8;
    let max_law = gumbel_max(&locations, beta)?;
    println!("max of {} Gumbels ~ {max_law:?}", locations.len());

    let laws: Vec<DistSpec> = locations.iter().map(|&c| DistSpec::gumbel(c, beta)).collect::<Result<_, _>>()?;
    let draws: Vec<SampleBatch> = laws.iter().enumerate().map(|(i, d)| d.sample(50_000, 10 + i as u64)).collect::<Result<_, _>>()?;
    let maxima: Vec<f64> = (0..50_000).map(|k| draws.iter().map(|b| b.values()[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
    println!("  KS against simulation: {:.4}", ks_statistic(&SampleBatch::from_values(maxima)?, &max_law, KsMode::TwoSided));

    let diff = gumbel_difference(&laws[3], &laws[0])?;
    println!("difference of two Gumbels ~ {diff:?}");
    let d: Vec<f64> = draws[3].values().iter().zip(draws[0].values()).map(|(x, y)| x - y).collect();
    println!("  KS against simulation: {:.4}", ks_statistic(&SampleBatch::from_values(d)?, &diff, KsMode::TwoSided));
    Ok(())
}
