//! Hard-max Q-iteration on a random DAG, from Gumbel noise to the fixed point.

use bellman_error::tabular::{bellman_step, init_q, make_random_dag, snapshot_errors, solve_qstar};
use bellman_error::DistSpec;

fn main() -> bellman_error::Result<()> {
    let mdp = make_random_dag(30, 4, 0.95, 3)?;
    let qstar = solve_qstar(&mdp)?;
    let mut q = init_q(&mdp, &DistSpec::gumbel(0.0, 1.0)?, 11)?;
    // on a DAG the iteration is exact after as many steps as the longest path
    while q.sup_distance(&qstar) > 0.0 {
        q = bellman_step(&mdp, &q)?;
        let snap = snapshot_errors(&mdp, &q, &qstar)?;
        let worst = snap.bellman_err.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        if q.iteration() % 5 == 0 || worst == 0.0 {
            println!("t = {:>2}  sup |Q - Q*| = {:.4e}  max |bellman error| = {worst:.4e}", q.iteration(), q.sup_distance(&qstar));
        }
    }
    println!("greedy policy: {:?}", q.greedy_policy());
    Ok(())
}
