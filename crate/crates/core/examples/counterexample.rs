//! Certifies the lower bound on the number of bound states for the fractal
//! counterexample at the first level.

use rough_weyl::counterexample::{build_example, certify, epsilon_admissible, ExampleConfig};

fn main() -> rough_weyl::Result<()> {
    let range = epsilon_admissible(2, 0.6)?;
    println!(
        "epsilon in ({:.3}, {:.3}), default {:.3}",
        range.lp_threshold, range.upper, range.default_epsilon
    );
    let cfg = ExampleConfig::new(0.6, 10, 1, 0.3)?;
    let ex = build_example(&cfg)?;
    let rep = certify(&ex, 1, 0)?;
    println!(
        "n = 1: lambda = {:.3}, {} forms negative: {}, max form {:.3}",
        rep.lambda, rep.count_lower_bound, rep.all_negative, rep.max_total
    );
    println!(
        "N / lambda^(d/2) >= {:.4} (log2 {:.2})",
        rep.ratio, rep.log2_ratio
    );
    Ok(())
}
