//! MSE against the Logistic loss on a small chain, a few seeds each.

use bellman_error::tabular::{make_chain, solve_qstar};
use bellman_error::trainer::{compare_losses, policy_is_optimal, run_training, LossKind, TrainConfig};

fn main() -> bellman_error::Result<()> {
    let env = make_chain(5, 0.99)?;
    let qstar = solve_qstar(&env)?;

    let cfg = TrainConfig { loss: LossKind::LLoss { sigma: 1.0 }, ..TrainConfig::default() };
    let log = run_training(&env, &cfg)?;
    println!(
        "one LLoss run: {} epochs, early stop {}, optimal policy {}",
        log.epochs.len(),
        log.stopped_early,
        policy_is_optimal(&env, &qstar, &log.final_policy)
    );

    let cmp = compare_losses(&env, &cfg, &[0, 1, 2])?;
    println!("mean average reward: MSE {:.4}, LLoss {:.4}", cmp.mean_mse_reward, cmp.mean_lloss_reward);
    if let Some(e) = cmp.enhancement {
        println!("enhancement {e:+.3}");
    }
    println!("Logistic beat Normal on {} of {} logged error batches", cmp.logistic_ks_wins, cmp.ks_cells);
    Ok(())
}
