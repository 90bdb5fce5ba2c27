use super::*;
use crate::counterexample::{build_example, ExampleConfig};
use crate::domain::{build_domain, DomainSpec};
use crate::exponents::compute_exponents;

fn square() -> HolderSubgraphDomain {
    build_domain(&DomainSpec::Flat {
        height: 1.0,
        gamma: 1.0,
        c: 0.5,
        h_omega: None,
    })
    .unwrap()
}

fn tent(amplitude: f64, center: [f64; 2], radius: f64) -> PotentialField {
    PotentialField::Tent {
        amplitude,
        center,
        radius,
    }
}

#[test]
fn ball_volumes() {
    assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
    assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
}

#[test]
fn semiclassical_values() {
    let res = QuadRes::default();
    let sq = square();
    let one = PotentialField::constant(-1.0);
    let n = semiclassical_count(&one, &sq, 4.0 * PI, 2, &res).unwrap();
    assert!((n - 1.0).abs() < 1e-12);
    assert_eq!(semiclassical_count(&one, &sq, 0.0, 2, &res).unwrap(), 0.0);
    // b_V int f^{0.3} / 0.3 / (4 pi), scipy per breakpoint piece
    let ex = build_example(&ExampleConfig::new(0.6, 10, 1, 0.3).unwrap()).unwrap();
    let n = semiclassical_count(&ex.potential, &ex.domain, 1.0, 2, &res).unwrap();
    assert!((n - 749.0451591975509).abs() < 1e-9 * n, "{n}");
}

#[test]
fn square_lattice_counts() {
    assert_eq!(neumann_square_count(50.0), 8);
    assert_eq!(dirichlet_square_count(50.0), 3);
    assert_eq!(neumann_square_count(0.0), 0);
    // (0,0) only
    assert_eq!(neumann_square_count(1.0), 1);
    // pi^2 itself is not counted
    assert_eq!(neumann_square_count(PI * PI), 1);
    assert_eq!(neumann_square_count(PI * PI * 1.000001), 3);
}

#[test]
fn lattice_error_grows_like_sqrt() {
    let lams: Vec<f64> = (0..12).map(|i| 1e3 * 2f64.powi(i)).collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = lams
        .iter()
        .map(|&l| {
            let e = (neumann_square_count(l) as f64 - l / (4.0 * PI)).abs();
            (l.ln(), e.ln())
        })
        .unzip();
    let s = theil_sen(&lx, &ly).unwrap();
    assert!((0.4..=0.7).contains(&s), "{s}");
}

#[test]
fn scan_matches_lattice() {
    let res = QuadRes::default();
    let rows = weyl_scan(
        &square(),
        &PotentialField::constant(-1.0),
        &[100.0, 200.0],
        1.0 / 64.0,
        Bc::Neumann,
        &res,
    )
    .unwrap();
    for r in &rows {
        let exact = neumann_square_count(r.lambda) as usize;
        // P1 eigenvalues lie above the exact ones
        assert!(
            r.fem_count <= exact && r.fem_count + 2 >= exact,
            "{r:?} vs {exact}"
        );
        assert!(r.clr_bound.is_finite() && r.clr_bound > 0.0);
    }
    let zero = weyl_scan(
        &square(),
        &PotentialField::Zero,
        &[10.0, 20.0],
        0.25,
        Bc::Neumann,
        &res,
    )
    .unwrap();
    assert!(zero
        .iter()
        .all(|r| r.fem_count == 0 && r.semiclassical == 0.0));
}

#[test]
fn scan_rejections() {
    let res = QuadRes::default();
    let one = PotentialField::constant(-1.0);
    let e = weyl_scan(&square(), &one, &[2000.0], 0.125, Bc::Neumann, &res).unwrap_err();
    match e {
        Error::Resolution { required, .. } => {
            assert!((required - 2.0 * PI / (8.0 * 2000f64.sqrt())).abs() < 1e-15)
        }
        other => panic!("{other:?}"),
    }
    assert!(weyl_scan(&square(), &one, &[20.0, 10.0], 0.25, Bc::Neumann, &res).is_err());
    let sing = PotentialField::HeightPower {
        coef: 1.0,
        exponent: -0.5,
    };
    assert!(matches!(
        weyl_scan(&square(), &sing, &[1.0], 0.01, Bc::Neumann, &res),
        Err(Error::Resolution { .. })
    ));
}

#[test]
fn bracketing_sandwich() {
    let w = tent(1.0, [0.5, 0.5], 0.25);
    let r = bracketing_check(&square(), &w, 2, 500.0, 1.0 / 32.0, 0.0).unwrap();
    assert_eq!(r.cubes, 4);
    assert!(r.holds, "{r:?}");
    assert!(!r.distance_condition);
    let r0 = bracketing_check(&square(), &w, 2, 0.0, 1.0 / 32.0, 0.0).unwrap();
    assert_eq!((r0.sum_dirichlet, r0.global, r0.sum_neumann), (0, 0, 0));
    // above zero every Neumann cube has its constant mode
    let r1 = bracketing_check(&square(), &w, 2, 0.0, 1.0 / 32.0, 1e-6).unwrap();
    assert_eq!((r1.global, r1.sum_neumann), (1, 4));
    let r3 = bracketing_check(&square(), &w, 3, 500.0, 1.0 / 32.0, 0.0).unwrap();
    assert_eq!(r3.cubes, 16);
    assert!(r3.holds && r3.distance_condition, "{r3:?}");
}

#[test]
fn bracketing_rejections() {
    let sq = square();
    let w = tent(1.0, [0.5, 0.5], 0.25);
    assert!(bracketing_check(&sq, &w, 2, 500.0, 0.1, 0.0).is_err());
    let edge = tent(1.0, [0.5, 0.98], 0.05);
    assert!(matches!(
        bracketing_check(&sq, &edge, 2, 500.0, 1.0 / 32.0, 0.0),
        Err(Error::SupportTooClose { m_level: 2 })
    ));
    assert!(bracketing_check(&sq, &PotentialField::constant(-1.0), 2, 1.0, 0.125, 0.0).is_err());
}

#[test]
fn clr_table_on_square() {
    let sq = square();
    let es = compute_exponents(2, 1.0, 0.5).unwrap();
    let res = QuadRes::default();
    let t = clr_bound_check(
        &sq,
        &PotentialField::constant(-1.0),
        &es,
        &[100.0, 200.0, 400.0],
        1.0 / 64.0,
        &res,
    )
    .unwrap();
    assert!(t.norm > 0.0);
    assert!(t.slope.abs() < 0.25, "{t:?}");
    assert!(t.rows.iter().all(|r| r.fem_count > 0));
    let z = clr_bound_check(&sq, &PotentialField::Zero, &es, &[100.0, 200.0], 0.25, &res).unwrap();
    assert!(z.rows.iter().all(|r| r.fem_count == 0));
    assert_eq!((z.fitted_c, z.slope), (0.0, 0.0));
}
