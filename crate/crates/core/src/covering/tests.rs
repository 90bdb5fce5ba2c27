use super::*;
use crate::domain::{build_domain, DomainSpec};
use crate::exponents::compute_exponents;

fn flat(height: f64, gamma: f64, c: f64, h_omega: Option<f64>) -> HolderSubgraphDomain {
    build_domain(&DomainSpec::Flat {
        height,
        gamma,
        c,
        h_omega,
    })
    .unwrap()
}

fn fractal() -> HolderSubgraphDomain {
    build_domain(&DomainSpec::Fractal {
        gamma: 0.6,
        m: 10,
        n_max: 1,
        relaxed: false,
        h_omega: None,
        window: None,
    })
    .unwrap()
}

fn es_of(dom: &HolderSubgraphDomain) -> ExponentSet {
    compute_exponents(2, dom.gamma, dom.c).unwrap()
}

#[test]
fn side_formula() {
    let dom = flat(1.0, 0.7, 3.0, Some(0.1));
    let es = es_of(&dom);
    let od = make_oscillatory_domain(&dom, [0.5, 0.2], 0.1, &es).unwrap();
    // c0 = 1.0943874e-3, a = c0 1.6^{1/0.7}
    assert!((es.c0 - 1.094387433438682e-3).abs() < 1e-15);
    assert!((od.a - 2.1417613286452463e-3).abs() < 1e-15);
    assert_eq!(od.kind, DomainKind::GraphCapped);
    assert!((od.h_center - 0.8).abs() < 1e-15);

    // tall column: the throttle exceeds delta
    let tall = flat(10_000.0, 0.7, 3.0, Some(0.1));
    let od = make_oscillatory_domain(&tall, [0.5, 0.2], 0.1, &es).unwrap();
    assert_eq!(od.a, 0.1);
    assert_eq!(od.kind, DomainKind::CuboidAEqDelta);

    // at delta = c0 h^{1/gamma} both branches give delta
    let h = 9_999.8;
    let delta = es.c0 * f64::powf(h, 1.0 / 0.7);
    let od = make_oscillatory_domain(&tall, [0.5, 0.2], delta, &es).unwrap();
    assert!((od.a - delta).abs() <= 1e-12 * delta);

    assert!(matches!(
        make_oscillatory_domain(&dom, [0.5, 0.05], 0.1, &es),
        Err(Error::ChartMiss { .. })
    ));
}

#[test]
fn open_rect_tests_are_exact() {
    let dom = build_domain(&DomainSpec::Samples {
        points: vec![(0.0, 0.5), (0.5, 1.0), (1.0, 0.5)],
        base_box: true,
        gamma: 1.0,
        c: 1.0,
        h_omega: None,
    })
    .unwrap();
    // touches the peak only at its closure
    assert!(!rect_meets_domain(&dom, &Rect::new(0.4, 0.6, 1.0, 1.2)));
    assert!(rect_meets_domain(&dom, &Rect::new(0.4, 0.6, 0.999, 1.2)));
    assert!(!rect_meets_domain(&dom, &Rect::new(2.0, 3.0, -1.0, -0.5)));
    assert!(rect_meets_domain(&dom, &Rect::new(1.9, 3.0, -1.0, -0.5)));
    // above y = 0 only the subgraph counts
    assert!(!rect_meets_domain(&dom, &Rect::new(1.2, 1.5, 0.0, 0.5)));
    assert!(rect_inside_domain(&dom, &Rect::new(0.25, 0.75, -0.5, 0.75)));
    assert!(!rect_inside_domain(
        &dom,
        &Rect::new(0.25, 0.75, -0.5, 0.76)
    ));
    assert!(!rect_inside_domain(&dom, &Rect::new(-0.1, 0.5, 0.1, 0.2)));
    let r = Rect::new(0.25, 0.75, -0.5, 2.0);
    // area: 0.5 * 0.5 below plus int_{0.25}^{0.75} f
    assert!((area_in_domain(&dom, &r) - (0.25 + 0.4375)).abs() < 1e-14);
}

#[test]
fn zero_potential_keeps_delta0() {
    let dom = flat(1.0, 1.0, 0.5, None);
    let es = es_of(&dom);
    let cfg = CoverConfig::default();
    let v = PotentialField::Zero;
    assert_eq!(
        select_delta(&dom, &v, [0.5, 0.5], 0.25, &es, &cfg).unwrap(),
        (0.25, CaseTag::Interior)
    );
    assert_eq!(
        select_delta(&dom, &v, [0.5, 0.9], 0.25, &es, &cfg).unwrap(),
        (0.25, CaseTag::Case1)
    );
}

#[test]
fn interior_constant_potential() {
    // Phi(v0/theta) |Q| = 1 with |Q| = delta^2
    let dom = flat(1.0, 1.0, 0.5, None);
    let es = es_of(&dom);
    let cfg = CoverConfig {
        rel_tol: 1e-6,
        ..CoverConfig::default()
    };
    let mut last = f64::INFINITY;
    for (v0, expect) in [(20.0, 0.09438312200955651), (40.0, 0.06019833792653503)] {
        let (d, tag) = select_delta(
            &dom,
            &PotentialField::constant(-v0),
            [0.5, 0.5],
            0.25,
            &es,
            &cfg,
        )
        .unwrap();
        assert_eq!(tag, CaseTag::Interior);
        assert!((d - expect).abs() < 2e-6 * expect, "{v0}: {d} vs {expect}");
        assert!(d < last);
        last = d;
    }
}

#[test]
fn flat_square_is_a_cube_cover() {
    let dom = flat(1.0, 1.0, 0.5, None);
    let es = es_of(&dom);
    let cfg = CoverConfig::default();
    let probe = probe_grid(&dom, 0.25, &es, 1.0).unwrap();
    let cf = greedy_cover_points(&dom, &PotentialField::Zero, 0.25, &es, &cfg, &probe).unwrap();
    let rep = verify_cover(&cf, &dom, &probe);
    assert!(rep.pairwise_disjoint);
    assert_eq!(rep.coverage_fraction, 1.0);
    assert!(cf.domains.iter().all(|d| d.a == d.delta));
    // planar Besicovitch-type bound for squares, 4^d
    assert!(rep.k_used <= 16, "{}", rep.k_used);
    assert!(count_vs_bound(&cf, 2) <= 4.0 * 16.0);
    assert_eq!(rep.j_sizes.total(), rep.total);

    let mut bad = cf.clone();
    bad.domains.push(bad.domains[0]);
    bad.family.push(bad.family[0]);
    assert!(!verify_cover(&bad, &dom, &probe).pairwise_disjoint);
}

#[test]
fn single_probe_point() {
    let dom = flat(1.0, 1.0, 0.5, None);
    let es = es_of(&dom);
    let cf = greedy_cover_points(
        &dom,
        &PotentialField::Zero,
        0.25,
        &es,
        &CoverConfig::default(),
        &[[0.5, 0.5]],
    )
    .unwrap();
    assert_eq!((cf.len(), cf.k_used), (1, 1));
    assert_eq!(count_vs_bound(&cf, 2), 0.0625);
}

#[test]
fn averaged_bound_unit_cube() {
    let dom = flat(1.0, 1.0, 0.5, None);
    let cf = CoverFamilies {
        domains: vec![OscillatoryDomain {
            center: [0.5, 0.5],
            delta: 1.0,
            a: 1.0,
            kind: DomainKind::InteriorCube,
            case_tag: CaseTag::Interior,
            h_center: 0.5,
        }],
        family: vec![0],
        k_used: 1,
        k_per_class: vec![(CoverClass::Cubes, 1)],
        delta0: 1.0,
        region: CoverRegion::Full,
    };
    let res = QuadRes::default();
    let b =
        averaged_potential_lower_bound(&cf, &PotentialField::constant(-1.0), &dom, &res).unwrap();
    assert!((b - 2.0).abs() < 1e-12);
    assert_eq!(
        averaged_potential_lower_bound(&cf, &PotentialField::Zero, &dom, &res).unwrap(),
        0.0
    );
}

#[test]
fn fractal_shape_properties() {
    let dom = fractal();
    let es = es_of(&dom);
    let mut n1 = 0;
    let mut n2 = 0;
    for i in 0..200 {
        let x = 0.2 + 0.6 * i as f64 / 200.0 + 1e-4;
        let fx = dom.f(x);
        // a = c0 h^{1/gamma}: h >= c1 delta
        let od = make_oscillatory_domain(&dom, [x, fx - 0.05], 1e-3, &es).unwrap();
        if od.kind == DomainKind::CuboidAEqC0h {
            n1 += 1;
            let rep = local_geometry_checks(&od, &dom, &es);
            assert!(rep.ok, "{:?}", rep.violations());
        }
        // graph-capped
        let od = make_oscillatory_domain(&dom, [x, fx - 0.01], 0.05, &es).unwrap();
        assert_eq!(od.kind, DomainKind::GraphCapped);
        n2 += 1;
        let rep = local_geometry_checks(&od, &dom, &es);
        assert!(rep.ok, "{:?}", rep.violations());
    }
    assert!(n1 > 100 && n2 == 200);
}

#[test]
fn fractal_cover_small() {
    let dom = fractal();
    let es = es_of(&dom);
    let cfg = CoverConfig::default();
    let probe = probe_grid(&dom, 0.125, &es, 1.0).unwrap();
    let cf = greedy_cover_points(&dom, &PotentialField::Zero, 0.125, &es, &cfg, &probe).unwrap();
    let rep = verify_cover(&cf, &dom, &probe);
    assert!(rep.pairwise_disjoint);
    assert_eq!(rep.coverage_fraction, 1.0);
    assert!(rep.kinds.graph_capped > 0);
    for od in &cf.domains {
        let g = local_geometry_checks(od, &dom, &es);
        assert!(g.ok, "{od:?}: {:?}", g.violations());
    }
}

#[test]
fn case_conditions_hold_a_posteriori() {
    let dom = flat(1.0, 0.75, 3.0, Some(0.1));
    let es = es_of(&dom);
    let cfg = CoverConfig::default();
    let v = PotentialField::HeightPower {
        coef: 5.0,
        exponent: -0.3,
    };
    let mut tags = Vec::new();
    for y in [0.5, 0.9, 0.99, 0.999] {
        let x = [0.5, y];
        let (delta, tag) = select_delta(&dom, &v, x, 0.25, &es, &cfg).unwrap();
        let od = OscillatoryDomain {
            case_tag: tag,
            ..make_oscillatory_domain(&dom, x, delta, &es).unwrap()
        };
        let chk = case_condition_check(&od, &v, &dom, &es, &cfg).unwrap();
        assert!(chk.holds, "{y}: {chk:?}");
        tags.push(tag);
    }
    assert!(tags.iter().any(|t| *t != CaseTag::Case1), "{tags:?}");
}
