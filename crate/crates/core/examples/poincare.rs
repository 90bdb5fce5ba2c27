//! Poincaré constant scaling on the hat template and a Poincaré-Sobolev
//! quotient on a thin strip.

use rough_weyl::exponents::compute_exponents;
use rough_weyl::spectral::{estimate_poincare_constant, estimate_ps_constant, PoincareTemplate};

fn main() -> rough_weyl::Result<()> {
    let fit =
        estimate_poincare_constant(PoincareTemplate::Hat, &[0.25, 0.125, 0.0625], 1.0 / 16.0)?;
    println!("mu2: {:.3?}", fit.mu2);
    println!(
        "slope {:.4} (scale invariance gives -2), C_P {:.4}",
        fit.slope, fit.c_p
    );

    let es = compute_exponents(2, 0.75, 1.0)?;
    let est = estimate_ps_constant(&[0.0, 0.5], &[1.0, 1.0], es.qstar, 1.0 / 16.0, 300, 1)?;
    println!(
        "q* = {:.3}: min |grad u|^2 / |u|_q^2 <= {:.4} (converged {})",
        es.qstar, est.value, est.converged
    );
    Ok(())
}
