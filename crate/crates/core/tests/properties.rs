use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use rough_weyl::cli::RunConfig;
use rough_weyl::counterexample::{
    build_example, form_bounds, ratio_log2, rayleigh_form, support_rect, Example, ExampleConfig,
};
use rough_weyl::covering::{greedy_cover, probe_grid, verify_cover, CoverConfig};
use rough_weyl::domain::{build_domain, DomainSpec, HolderSubgraphDomain};
use rough_weyl::exponents::{
    beta_below_one_threshold, compute_exponents, verify_exponent_identities,
};
use rough_weyl::norms::{
    lp_norm, lp_norm_on, luxemburg, orlicz_norm, weighted_seminorm, PotentialField, Young,
};
use rough_weyl::quadrature::{QuadRes, Region};
use rough_weyl::spectral::{
    assemble, count_below, inertia, triangulate, Bc, Mesh, MeshOptions, SymMatrix,
};
use rough_weyl::weyl::{scan_csv, weyl_scan};

fn flat(height: f64, gamma: f64) -> HolderSubgraphDomain {
    build_domain(&DomainSpec::Flat {
        height,
        gamma,
        c: 1.0,
        h_omega: Some(0.1),
    })
    .unwrap()
}

fn fractal() -> &'static HolderSubgraphDomain {
    static DOM: OnceLock<HolderSubgraphDomain> = OnceLock::new();
    DOM.get_or_init(|| {
        build_domain(&DomainSpec::Fractal {
            gamma: 0.6,
            m: 10,
            n_max: 1,
            relaxed: false,
            h_omega: None,
            window: None,
        })
        .unwrap()
    })
}

fn example() -> &'static Example {
    static EX: OnceLock<Example> = OnceLock::new();
    EX.get_or_init(|| build_example(&ExampleConfig::new(0.6, 10, 1, 0.3).unwrap()).unwrap())
}

fn square_mesh() -> &'static Mesh {
    static MESH: OnceLock<Mesh> = OnceLock::new();
    MESH.get_or_init(|| triangulate(&flat(1.0, 1.0), &MeshOptions::new(1.0 / 16.0)).unwrap())
}

fn random_symmetric(n: usize, vals: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| vals[i * n + j]);
    (&a + a.transpose()) * 0.5
}

fn eig_inertia(a: &DMatrix<f64>) -> (usize, usize, usize) {
    let ev = SymmetricEigen::new(a.clone()).eigenvalues;
    let neg = ev.iter().filter(|&&e| e < -1e-9).count();
    let pos = ev.iter().filter(|&&e| e > 1e-9).count();
    (neg, ev.len() - neg - pos, pos)
}

fn matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..=200).prop_flat_map(|n| {
        proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| random_symmetric(n, &v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponent_identities(d in 2u32..=6, t in 0.0f64..1.0) {
        let lo = (d as f64 - 1.0) / d as f64;
        let gamma = lo + t * (1.0 - lo);
        let es = compute_exponents(d, gamma, 1.0).unwrap();
        prop_assert!(verify_exponent_identities(&es).max_residual() < 1e-10);
        if gamma >= beta_below_one_threshold(d) {
            prop_assert!(es.beta < 1.0, "beta {} at gamma {}", es.beta, gamma);
        }
    }

    #[test]
    fn c0_nonincreasing_in_c(gamma in 0.55f64..1.0, c in 0.01f64..10.0, f in 1.0f64..5.0) {
        let a = compute_exponents(2, gamma, c).unwrap();
        let b = compute_exponents(2, gamma, c * f).unwrap();
        prop_assert!(b.c0 <= a.c0);
    }

    #[test]
    fn breakpoints_are_exact(i in 0usize..2049) {
        let dom = fractal();
        let i = i.min(dom.profile.xs.len() - 1);
        prop_assert_eq!(dom.f(dom.profile.xs[i]).to_bits(), dom.profile.ys[i].to_bits());
    }

    #[test]
    fn boundary_layer_lies_in_chart(s in 0.0f64..1.0, r in 0.0f64..1.0, theta in 0.0f64..std::f64::consts::TAU) {
        let dom = fractal();
        let (w0, w1) = dom.hat_window();
        let x = w0 + s * (w1 - w0);
        let t = r * dom.h_omega;
        let p = [x + t * theta.cos(), dom.f(x) + t * theta.sin()];
        if dom.contains(p) {
            prop_assert!(dom.in_chart_layer(p), "{p:?}");
        }
    }

    #[test]
    fn luxemburg_root(vals in proptest::collection::vec((0.01f64..1.0, 0.0f64..50.0), 1..20)) {
        prop_assume!(vals.iter().any(|(_, a)| *a > 1e-3));
        let young = Young::LLogL;
        let t = luxemburg(&vals, young).unwrap();
        let mass: f64 = vals.iter().map(|(w, a)| w * young.eval(a / t)).sum();
        prop_assert!((mass - 1.0).abs() < 1e-8, "{mass}");
    }

    #[test]
    fn inertia_subadditive(a in matrix(), seed in any::<u64>()) {
        let n = a.nrows();
        let mut rng = seed;
        let b = DMatrix::from_fn(n, n, |_, _| {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        });
        let b = (&b + b.transpose()) * 0.5;
        let na = inertia(&SymMatrix::from_dense(&a)).neg;
        let nb = inertia(&SymMatrix::from_dense(&b)).neg;
        let nab = inertia(&SymMatrix::from_dense(&(&a + &b))).neg;
        prop_assert!(nab <= na + nb);
    }

    #[test]
    fn support_interiors_disjoint(k1 in 0u64..1024, k2 in 0u64..1024) {
        prop_assume!(k1 != k2);
        let ex = example();
        let a = support_rect(ex, 1, k1).unwrap();
        let b = support_rect(ex, 1, k2).unwrap();
        let overlap_x = a.x0.max(b.x0) < a.x1.min(b.x1);
        let overlap_y = a.y0.max(b.y0) < a.y1.min(b.y1);
        prop_assert!(!(overlap_x && overlap_y));
    }

    #[test]
    fn ratio_steps_are_exact(gamma in 0.51f64..0.99, m in 1u32..40, n in 0u32..6, t in 0.01f64..0.99) {
        let eps = t * (1.0 / gamma - 1.0);
        let step = ratio_log2(2, gamma, m, eps, n + 1) - ratio_log2(2, gamma, m, eps, n);
        let expect = m as f64 * (1.0 - gamma * (1.0 + eps));
        prop_assert!((step - expect).abs() <= 1e-12 * (1.0 + (m * (n + 1)) as f64));
    }

    #[test]
    fn config_round_trip(gamma in 0.51f64..1.0, lambda in 0.0f64..1e4, seed in any::<u64>()) {
        let cfg = RunConfig::from_value(serde_json::json!({
            "command": "count",
            "gamma": gamma,
            "lambda": lambda,
            "rng_seed": seed,
            "domain": {"flat": {"height": 1.0}},
        })).unwrap();
        let again = RunConfig::from_json(&cfg.canonical()).unwrap();
        prop_assert_eq!(again.canonical(), cfg.canonical());
        prop_assert_eq!(again.hash(), cfg.hash());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inertia_matches_eigensolver(a in matrix()) {
        let ours = inertia(&SymMatrix::from_dense(&a));
        prop_assert_eq!(ours.triple(), eig_inertia(&a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn form_bounds_hold(k in 0u64..1024) {
        let ex = example();
        let f = rayleigh_form(ex, 1, k, 1.0).unwrap();
        let (l2_lo, grad_hi) = form_bounds(&ex.cfg, 1);
        prop_assert!(f.l2 >= l2_lo && f.grad <= grad_hi, "{f:?}");
    }

    #[test]
    fn count_monotone(c1 in -60.0f64..0.0, dc in 0.0f64..40.0, lambda in 1.0f64..50.0, s1 in -10.0f64..50.0, ds in 0.0f64..50.0) {
        let mesh = square_mesh();
        let c2 = (c1 + dc).min(0.0);
        let op1 = assemble(mesh, &PotentialField::constant(c1), lambda, Bc::Neumann).unwrap();
        let op2 = assemble(mesh, &PotentialField::constant(c2), lambda, Bc::Neumann).unwrap();
        // raising V lowers the count
        prop_assert!(count_below(&op2, s1).count <= count_below(&op1, s1).count);
        // raising sigma raises it
        prop_assert!(count_below(&op1, s1).count <= count_below(&op1, s1 + ds).count);
        let dir = assemble(mesh, &PotentialField::constant(c1), lambda, Bc::Dirichlet).unwrap();
        prop_assert!(count_below(&dir, s1).count <= count_below(&op1, s1).count);
    }

    #[test]
    fn lp_interpolation(coef in 0.1f64..10.0, exponent in -0.4f64..0.0, p in 1.05f64..4.0, height in 0.3f64..1.0) {
        // |Omega| <= 1: ||V||_1 <= |Omega|^{1 - 1/p} ||V||_p
        prop_assume!(p * exponent > -0.95);
        let dom = flat(height, 1.0);
        let v = PotentialField::HeightPower { coef, exponent };
        let res = QuadRes::default();
        let l1 = lp_norm(&v, &dom, 1.0, &res).unwrap();
        let lp = lp_norm(&v, &dom, p, &res).unwrap();
        prop_assert!(l1 <= dom.area().powf(1.0 - 1.0 / p) * lp * (1.0 + 1e-10));
    }

    #[test]
    fn seminorm_at_zero_weight_is_chart_lp(coef in 0.1f64..10.0, exponent in -0.4f64..0.0, p in 1.0f64..3.0) {
        prop_assume!(p * exponent > -0.95);
        let dom = flat(1.0, 0.75);
        let v = PotentialField::HeightPower { coef, exponent };
        let res = QuadRes::default();
        let a = weighted_seminorm(&v, &dom, p, 0.0, 0.0, &res).unwrap();
        let b = lp_norm_on(&v, &dom, &Region::chart(), p, &res).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * b);
    }

    #[test]
    fn orlicz_monotone(c1 in 0.0f64..20.0, dc in 0.0f64..20.0, exponent in -0.5f64..0.0) {
        let dom = flat(1.0, 0.75);
        let res = QuadRes::default();
        let v1 = PotentialField::HeightPower { coef: c1, exponent };
        let v2 = PotentialField::HeightPower { coef: c1 + dc, exponent };
        let a = orlicz_norm(&v1, &dom, Young::LLogL, &res).unwrap();
        let b = orlicz_norm(&v2, &dom, Young::LLogL, &res).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-9));
    }

    #[test]
    fn quadrature_converges(exponent in -0.45f64..0.0, beta in 0.0f64..0.5, p in 1.0f64..2.0) {
        prop_assume!(beta - p * exponent < 0.95);
        let dom = flat(1.0, 0.75);
        let v = PotentialField::HeightPower { coef: 1.0, exponent };
        let base = QuadRes::default();
        let fine = QuadRes { panels: 2 * base.panels, levels: 2 * base.levels, ..base };
        let a = weighted_seminorm(&v, &dom, p, beta, 0.0, &base).unwrap();
        let b = weighted_seminorm(&v, &dom, p, beta, 0.0, &fine).unwrap();
        prop_assert!((a - b).abs() < 5e-3 * b, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cover_invariants(height in 0.5f64..1.5, value in -30.0f64..0.0, delta0 in 0.12f64..0.3) {
        let dom = flat(height, 1.0);
        let es = compute_exponents(2, dom.gamma, dom.c).unwrap();
        let cfg = CoverConfig::default();
        let v = PotentialField::constant(value);
        let cf = greedy_cover(&dom, &v, delta0, &es, &cfg).unwrap();
        let probe = probe_grid(&dom, delta0, &es, cfg.probe_refine).unwrap();
        let rep = verify_cover(&cf, &dom, &probe);
        prop_assert!(rep.pairwise_disjoint, "{:?}", rep.overlap_witness);
        prop_assert_eq!(rep.coverage_fraction, 1.0);
        // a later domain of the same class is never more than twice as large
        for (j, b) in cf.domains.iter().enumerate() {
            for a in &cf.domains[..j] {
                if a.class() == b.class() {
                    prop_assert!(b.delta <= 2.0 * a.delta);
                }
            }
        }
    }
}

#[test]
fn scan_is_deterministic() {
    let dom = flat(1.0, 1.0);
    let v = PotentialField::constant(-1.0);
    let run = || {
        scan_csv(
            &weyl_scan(
                &dom,
                &v,
                &[50.0, 100.0],
                1.0 / 32.0,
                Bc::Neumann,
                &QuadRes::default(),
            )
            .unwrap(),
        )
    };
    assert_eq!(run(), run());
}

#[test]
fn neumann_kernel() {
    let mesh = square_mesh();
    let op = assemble(mesh, &PotentialField::Zero, 0.0, Bc::Neumann).unwrap();
    assert!(count_below(&op, 1e-9).count >= 1);
    let ones = vec![1.0; mesh.vertices.len()];
    let rq = op.stiffness.quad(&ones) / op.mass.quad(&ones);
    assert!(rq.abs() < 1e-12, "{rq}");
}
