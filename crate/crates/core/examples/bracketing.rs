//! Dirichlet-Neumann bracketing over the dyadic cubes meeting a compact support.

use rough_weyl::domain::{build_domain, DomainSpec};
use rough_weyl::norms::PotentialField;
use rough_weyl::weyl::bracketing_check;

fn main() -> rough_weyl::Result<()> {
    let dom = build_domain(&DomainSpec::Flat {
        height: 1.0,
        gamma: 1.0,
        c: 0.5,
        h_omega: None,
    })?;
    let w = PotentialField::Tent {
        amplitude: 1.0,
        center: [0.5, 0.5],
        radius: 0.25,
    };
    for lambda in [200.0, 500.0] {
        for m_level in [2, 3] {
            let r = bracketing_check(&dom, &w, m_level, lambda, 1.0 / 64.0, 0.0)?;
            println!(
                "lambda {lambda}, m {m_level}: {} cubes, sum D {} <= N {} <= sum N {} ({})",
                r.cubes, r.sum_dirichlet, r.global, r.sum_neumann, r.holds
            );
        }
    }
    Ok(())
}
