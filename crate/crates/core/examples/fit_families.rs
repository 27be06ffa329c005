//! Fit all three families to Logistic data and rank them by KS distance.

use bellman_error::fit::write_summary_csv;
use bellman_error::{rank_families, DistSpec, FitOptions};

fn main() -> bellman_error::Result<()> {
    let data = DistSpec::logistic(1.5, 0.7)?.sample(5_000, 42)?;
    let reports = rank_families(&data, FitOptions::default())?;
    write_summary_csv(&reports, std::io::stdout().lock())?;
    Ok(())
}
