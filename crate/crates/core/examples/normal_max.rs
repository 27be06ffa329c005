//! Gumbel approximation of the maximum of N standard Normals.

use bellman_error::normal_max::{exact_ks, monte_carlo_ks, normal_max_gumbel};

fn main() -> bellman_error::Result<()> {
    for k in [4, 8, 12, 16] {
        let n = 1u64 << k;
        let p = normal_max_gumbel(n)?;
        println!(
            "N = {n:>6}: b_N = {:.5}, a_N = {:.5}, sup |Phi^N - G| = {:.4}, MC KS = {:.4}",
            p.b_n,
            p.a_n,
            exact_ks(n)?,
            monte_carlo_ks(n, 20_000, 1)?
        );
    }
    match normal_max_gumbel(8) {
        Ok(p) => println!("N = 8: {p:?}"),
        Err(e) => println!("N = 8: {e}"),
    }
    Ok(())
}
