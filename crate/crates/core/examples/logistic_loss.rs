use bellman_error::loss::{l_loss, l_loss_grad, mse_loss, taylor_gap, LossConfig};

fn main() -> bellman_error::Result<()> {
    let cfg = LossConfig::new(1.0)?;
    let errors = [-3.0, -0.4, 0.0, 0.2, 5.0];
    println!("MSE   = {:.5}", mse_loss(&errors)?);
    println!("LLoss = {:.5}", l_loss(&errors, &cfg)?);
    println!("dLLoss/de = {:.5?}", l_loss_grad(&errors, &cfg)?);

    // near zero the Logistic loss is ln 4 plus half the MSE, up to a quartic term
    for t in [0.5, 0.25, 0.1] {
        println!("t = {t:<5} gap = {:.3e}  gap/t^4 = {:.5}", taylor_gap(t), taylor_gap(t) / t.powi(4));
    }
    Ok(())
}
