//! Counts eigenvalues below a shift through the inertia of a sparse LDL^T.

use rough_weyl::domain::{build_domain, DomainSpec};
use rough_weyl::norms::PotentialField;
use rough_weyl::spectral::{
    assemble, count_below, lowest_eigenvalues, triangulate, Bc, MeshOptions,
};
use rough_weyl::weyl::{dirichlet_square_count, neumann_square_count};

fn main() -> rough_weyl::Result<()> {
    let dom = build_domain(&DomainSpec::Flat {
        height: 1.0,
        gamma: 1.0,
        c: 0.5,
        h_omega: None,
    })?;
    let mesh = triangulate(&dom, &MeshOptions::new(1.0 / 64.0))?;
    println!("mesh: {:?}", mesh.stats());
    let v = PotentialField::constant(-1.0);
    for bc in [Bc::Neumann, Bc::Dirichlet] {
        let op = assemble(&mesh, &v, 200.0, bc)?;
        let c = count_below(&op, 0.0);
        let exact = match bc {
            Bc::Neumann => neumann_square_count(200.0),
            Bc::Dirichlet => dirichlet_square_count(200.0),
        };
        println!("{bc:?}: N(-Δ - 200) = {} (lattice count {exact})", c.count);
    }
    let op = assemble(&mesh, &PotentialField::Zero, 0.0, Bc::Dirichlet)?;
    let ev = lowest_eigenvalues(&op, 3, 1e-8)?;
    println!(
        "lowest Dirichlet eigenvalues {ev:.4?} (2π² = {:.4})",
        2.0 * std::f64::consts::PI.powi(2)
    );
    Ok(())
}
