//! Exponent bookkeeping for a few dimensions and Hölder exponents.

use rough_weyl::exponents::{
    beta_below_one_threshold, compute_exponents, verify_exponent_identities,
};

fn main() -> rough_weyl::Result<()> {
    println!("d  gamma   mu      beta    ptilde  qstar   residual");
    for d in 2..=4 {
        let lo = (d as f64 - 1.0) / d as f64;
        for gamma in [lo + 0.05, 0.85, 0.95] {
            let es = compute_exponents(d, gamma, 1.0)?;
            let id = verify_exponent_identities(&es);
            println!(
                "{d}  {gamma:.3}  {:.4}  {:.4}  {:.4}  {:.4}  {:.1e}",
                es.mu,
                es.beta,
                es.ptilde,
                es.qstar,
                id.max_residual()
            );
        }
        println!(
            "   beta < 1 from gamma >= {:.4}",
            beta_below_one_threshold(d)
        );
    }
    Ok(())
}
