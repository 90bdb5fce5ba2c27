//! Norms of a boundary-singular potential and the divergence diagnostic.

use rough_weyl::domain::{build_domain, DomainSpec};
use rough_weyl::exponents::compute_exponents;
use rough_weyl::norms::{divergence_slope, norm_report, PotentialField};
use rough_weyl::quadrature::QuadRes;

fn main() -> rough_weyl::Result<()> {
    let dom = build_domain(&DomainSpec::Flat {
        height: 1.0,
        gamma: 0.75,
        c: 1.0,
        h_omega: Some(0.1),
    })?;
    let es = compute_exponents(2, dom.gamma, dom.c)?;
    let res = QuadRes::default();
    for exponent in [-0.2, -0.4] {
        let v = PotentialField::HeightPower {
            coef: 1.0,
            exponent,
        };
        let rep = norm_report(&v, &dom, &es, es.ptilde, es.beta, 0.0, &res)?;
        println!("V = -h^{exponent}: {rep:?}");
    }

    // the weighted integral diverges once beta - p * exponent >= 1
    let v = PotentialField::HeightPower {
        coef: 1.0,
        exponent: -0.6,
    };
    let etas: Vec<f64> = (2..=8).map(|k| 10f64.powi(-k)).collect();
    let fit = divergence_slope(&v, &dom, es.ptilde, es.beta, &etas, &res)?;
    println!(
        "V = -h^-0.6: shell slope {:.3}, divergent {}",
        fit.shell_slope, fit.divergent
    );
    Ok(())
}
