//! Five levels, 5000 actions, reward 1: fitted families of the gap and the Bellman error
//! after each Q-iteration, and the predicted gap mean under a Gumbel start.

use bellman_error::fit::{BinRule, FitOptions, KsMode};
use bellman_error::tabular::{make_example1, predict_gumbel, solve_qstar, TreeRowSampler};
use bellman_error::{rank_families, DistSpec, SampleBatch};

fn main() -> bellman_error::Result<()> {
    let opts = FitOptions { bins: BinRule::Fixed(50), ks_mode: KsMode::TwoSided };
    let normal = TreeRowSampler::example1(DistSpec::normal(0.0, 1.0)?)?;
    for t in 1..=4 {
        let snap = normal.sample_root(t, 7)?;
        let gap = rank_families(&SampleBatch::from_values(snap.eps_gap.clone())?, opts)?;
        let err = rank_families(&SampleBatch::from_values(snap.bellman_err.clone())?, opts)?;
        println!(
            "t = {t}: gap best fit {} (KS {:.4}), Bellman error best fit {} (KS {:.4})",
            gap[0].family, gap[0].ks, err[0].family, err[0].ks
        );
    }

    let mdp = make_example1();
    let qstar = solve_qstar(&mdp)?;
    let gumbel = TreeRowSampler::example1(DistSpec::gumbel(0.0, 1.0)?)?;
    let g = mdp.gamma();
    for t in 1..=3 {
        let pred = predict_gumbel(&mdp, t, g * (mdp.n_actions() as f64).ln(), g)?;
        let gaps = gumbel.sample_root(t, 7)?.eps_gap;
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        println!("t = {t}: predicted gap mean {:.4}, sampled {mean:.4}", pred.gap_mean(&mdp, &qstar, 0, 0));
    }
    Ok(())
}
