//! Greedy cover of the fractal domain by oscillatory domains.

use rough_weyl::covering::{count_vs_bound, greedy_cover, probe_grid, verify_cover, CoverConfig};
use rough_weyl::domain::{build_domain, DomainSpec};
use rough_weyl::exponents::compute_exponents;
use rough_weyl::norms::PotentialField;

fn main() -> rough_weyl::Result<()> {
    let dom = build_domain(&DomainSpec::Fractal {
        gamma: 0.6,
        m: 10,
        n_max: 1,
        relaxed: false,
        h_omega: None,
        window: None,
    })?;
    let es = compute_exponents(2, dom.gamma, dom.c)?;
    let cfg = CoverConfig::default();
    for delta0 in [0.25, 0.125] {
        let cf = greedy_cover(&dom, &PotentialField::Zero, delta0, &es, &cfg)?;
        let probe = probe_grid(&dom, delta0, &es, cfg.probe_refine)?;
        let rep = verify_cover(&cf, &dom, &probe);
        println!(
            "delta0 {delta0}: {} domains in {} families, disjoint {}, coverage {:.3}, sum delta^2 {:.3}",
            rep.total,
            rep.k_used,
            rep.pairwise_disjoint,
            rep.coverage_fraction,
            count_vs_bound(&cf, 2)
        );
        println!("  kinds {:?}", rep.kinds);
    }
    Ok(())
}
