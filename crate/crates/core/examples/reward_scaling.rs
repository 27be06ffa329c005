//! Expected Bellman error as rewards are scaled by φ.

use bellman_error::scaling::{check_conditions, linear_grid, scaling_curve, RewardSample};

fn main() -> bellman_error::Result<()> {
    let mut rewards = vec![1.0];
    rewards.extend([-1.0; 10]);
    let sample = RewardSample::new(rewards, 1.0)?;
    println!("{:?}", check_conditions(&sample));

    let curve = scaling_curve(&sample, &linear_grid(0.5, 3.0, 11)?)?;
    for p in &curve.points {
        println!("phi = {:.2}  E[err] = {:+.5}", p.phi, p.expected_error);
    }
    println!("phi* = {:.6}", curve.phi_star.unwrap_or(f64::NAN));
    Ok(())
}
