//! Eigenvalue counts against the semiclassical prediction.

use rough_weyl::domain::{build_domain, DomainSpec};
use rough_weyl::norms::PotentialField;
use rough_weyl::quadrature::QuadRes;
use rough_weyl::spectral::Bc;
use rough_weyl::weyl::{scan_csv, weyl_scan};

fn main() -> rough_weyl::Result<()> {
    let dom = build_domain(&DomainSpec::Fractal {
        gamma: 0.75,
        m: 8,
        n_max: 1,
        relaxed: true,
        h_omega: None,
        window: None,
    })?;
    let v = PotentialField::constant(-1.0);
    let rows = weyl_scan(
        &dom,
        &v,
        &[250.0, 500.0, 1000.0],
        1.0 / 96.0,
        Bc::Neumann,
        &QuadRes::default(),
    )?;
    print!("{}", scan_csv(&rows));
    println!("|Ω|/4π = {:.4}", dom.area() / (4.0 * std::f64::consts::PI));
    Ok(())
}
