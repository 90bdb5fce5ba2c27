//! Builds the tent-series fractal domain and checks its boundary.

use rough_weyl::domain::{build_domain, holder_check, spike_window_scan, DomainSpec};

fn main() -> rough_weyl::Result<()> {
    let dom = build_domain(&DomainSpec::Fractal {
        gamma: 0.6,
        m: 10,
        n_max: 2,
        relaxed: false,
        h_omega: None,
        window: None,
    })?;
    println!("breakpoints: {}", dom.profile.xs.len());
    println!("area:        {:.6}", dom.area());
    println!("h_omega:     {:.4e}", dom.h_omega);
    println!(
        "Hölder ratio over 10^4 pairs: {:.4}",
        holder_check(&dom, 10_000, 7)
    );

    let p = dom.fractal.expect("fractal domain");
    for n in 0..=p.n_max {
        let s = spike_window_scan(&p, n)?;
        println!(
            "level {n}: {} cells, window ratios [{:.4}, {:.4}], violations {}",
            s.cells, s.min_ratio_mid, s.max_ratio, s.violations
        );
    }
    Ok(())
}
