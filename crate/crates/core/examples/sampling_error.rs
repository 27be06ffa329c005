use bellman_error::order_stats::{sampling_error, OrderStatTable};

fn main() -> bellman_error::Result<()> {
    let table = OrderStatTable::new(8, 0.0, 1.0)?;
    println!("E[x_(i)] for N = 8 standard Logistic draws: {:.4?}", table.expectations);
    println!("\n{:>5} {:>12}", "N", "S_e");
    for n in [2, 4, 8, 16, 32, 64, 128, 256] {
        println!("{n:>5} {:>12.4e}", sampling_error(n, 0.0, 1.0)?.s_e);
    }
    Ok(())
}
