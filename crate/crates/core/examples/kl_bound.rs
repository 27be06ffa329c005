//! KL divergence between a Gumbel law and its discounted contraction, against its bound.

use bellman_error::gumbel::kl_bound;

fn main() -> bellman_error::Result<()> {
    println!("{:>8} {:>7} {:>12} {:>12}  dominated", "A*", "gamma", "numeric", "bound");
    for a in [-10.0, 0.0, 10.0, 100.0] {
        for g in [0.9, 0.99, 0.999] {
            let r = kl_bound(a, g)?;
            println!("{a:>8} {g:>7} {:>12.5} {:>12.5}  {}", r.numeric_kl, r.bound, r.dominated);
        }
    }
    Ok(())
}
