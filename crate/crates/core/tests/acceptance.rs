//! Acceptance checks 1-10. Prints one PASS/FAIL line per criterion with its
//! sub-checks. Hard sub-checks fail the run; sub-checks marked `reported`
//! print their outcome without failing it. `info` lines are context only and
//! do not enter the verdict.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rough_weyl::counterexample::{
    boundary_divergence, build_example, certify, epsilon_admissible, ExampleConfig,
};
use rough_weyl::covering::{greedy_cover, probe_grid, verify_cover, CoverConfig};
use rough_weyl::domain::{
    build_domain, holder_check_fractal, spike_window_scan, DomainSpec, FractalParams,
    HolderSubgraphDomain,
};
use rough_weyl::exponents::{
    beta_below_one_threshold, compute_exponents, verify_exponent_identities,
};
use rough_weyl::fit::theil_sen;
use rough_weyl::norms::PotentialField;
use rough_weyl::quadrature::QuadRes;
use rough_weyl::spectral::{
    assemble, count_below, estimate_poincare_constant, estimate_ps_constant, inertia,
    lowest_eigenvalues, triangulate, Bc, MeshOptions, PoincareTemplate, SymMatrix,
};
use rough_weyl::weyl::{bracketing_check, clr_bound_check, weyl_scan};

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Hard,
    Reported,
    Info,
}

struct Check {
    name: String,
    ok: bool,
    kind: Kind,
    detail: String,
}

#[derive(Default)]
struct Criterion {
    checks: Vec<Check>,
}

impl Criterion {
    fn hard(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.push(name, ok, Kind::Hard, detail.into());
    }

    fn reported(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.push(name, ok, Kind::Reported, detail.into());
    }

    fn info(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.push(name, ok, Kind::Info, detail.into());
    }

    fn push(&mut self, name: &str, ok: bool, kind: Kind, detail: String) {
        self.checks.push(Check {
            name: name.to_owned(),
            ok,
            kind,
            detail,
        });
    }

    fn runtime(&mut self, elapsed: Duration, limit_s: f64) {
        let s = elapsed.as_secs_f64();
        self.reported(
            "runtime",
            s < limit_s,
            format!("{s:.1} s (limit {limit_s} s)"),
        );
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn square(h_omega: Option<f64>) -> HolderSubgraphDomain {
    build_domain(&DomainSpec::Flat {
        height: 1.0,
        gamma: 1.0,
        c: 0.5,
        h_omega,
    })
    .unwrap()
}

fn truncated_fractal(h_omega: Option<f64>) -> HolderSubgraphDomain {
    build_domain(&DomainSpec::Fractal {
        gamma: 0.75,
        m: 8,
        n_max: 1,
        relaxed: true,
        h_omega,
        window: None,
    })
    .unwrap()
}

fn criterion_1(c: &mut Criterion) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut beta_ok = true;
    let mut cases = 0;
    for d in 2..=6u32 {
        let lo = (d as f64 - 1.0) / d as f64;
        for i in 0..20 {
            let gamma = lo + (1.0 - lo) * i as f64 / 20.0;
            let es = compute_exponents(d, gamma, 1.0).unwrap();
            worst = worst.max(verify_exponent_identities(&es).max_residual());
            if gamma >= beta_below_one_threshold(d) {
                beta_ok &= es.beta < 1.0;
            }
            cases += 1;
        }
    }
    c.hard(
        "identities",
        worst < 1e-10,
        format!("max residual {worst:.2e} over {cases} cases"),
    );
    c.hard("beta < 1 above threshold", beta_ok, "");
    c.runtime(t.elapsed(), 1.0);
}

fn criterion_2(c: &mut Criterion) {
    let t = Instant::now();
    let p = FractalParams::new(0.6, 10, 2).unwrap();
    let ratio = holder_check_fractal(&p, 100_000, 2);
    c.hard(
        "Hölder ratio <= 3",
        ratio <= 3.0,
        format!("{ratio:.4} over 10^5 pairs"),
    );
    for n in 0..=2 {
        let s = spike_window_scan(&p, n).unwrap();
        c.hard(
            &format!("spike window n={n}"),
            s.violations == 0,
            format!(
                "{} cells, ratios [{:.4}, {:.4}], {} violations",
                s.cells, s.min_ratio_mid, s.max_ratio, s.violations
            ),
        );
    }
    c.runtime(t.elapsed(), 30.0);
}

fn criterion_3(c: &mut Criterion) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=200);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = (&a + a.transpose()) * 0.5;
        let ev = SymmetricEigen::new(a.clone()).eigenvalues;
        let neg = ev.iter().filter(|&&e| e < -1e-9).count();
        let pos = ev.iter().filter(|&&e| e > 1e-9).count();
        let ours = inertia(&SymMatrix::from_dense(&a)).triple();
        if ours != (neg, n - neg - pos, pos) {
            mismatches += 1;
        }
    }
    c.hard(
        "LDLT inertia = eigenvalue signs",
        mismatches == 0,
        format!("{mismatches}/200 mismatches"),
    );
    c.runtime(t.elapsed(), 30.0);
}

fn criterion_4(c: &mut Criterion) {
    let t = Instant::now();
    let mesh = triangulate(&square(None), &MeshOptions::new(1.0 / 64.0)).unwrap();
    let neu = assemble(&mesh, &PotentialField::Zero, 0.0, Bc::Neumann).unwrap();
    let dir = assemble(&mesh, &PotentialField::Zero, 0.0, Bc::Dirichlet).unwrap();
    let n = count_below(&neu, 50.0).count;
    let d = count_below(&dir, 50.0).count;
    c.hard("Neumann count below 50 = 8", n == 8, format!("{n}"));
    c.hard("Dirichlet count below 50 = 3", d == 3, format!("{d}"));
    let mu2 = lowest_eigenvalues(&neu, 2, 1e-10).unwrap()[1];
    let rel = (mu2 - PI * PI).abs() / (PI * PI);
    c.hard(
        "mu2 within 1% of pi^2",
        rel < 0.01,
        format!("{mu2:.5} ({:.3}%)", 100.0 * rel),
    );
    c.runtime(t.elapsed(), 60.0);
}

fn weyl_ratio(dom: &HolderSubgraphDomain, mesh_h: f64) -> (f64, f64) {
    let v = PotentialField::constant(-1.0);
    let rows = weyl_scan(dom, &v, &[2000.0], mesh_h, Bc::Neumann, &QuadRes::default()).unwrap();
    let r = rows[0];
    (r.ratio, r.semiclassical / r.lambda)
}

fn criterion_5(c: &mut Criterion) {
    let t = Instant::now();
    let (r, w) = weyl_ratio(&square(None), 1.0 / 256.0);
    let rel = (r - w).abs() / w;
    c.hard(
        "square N/lambda within 10%",
        rel < 0.10,
        format!("{r:.4} vs {w:.4} ({:.1}%)", 100.0 * rel),
    );
    let (r, w) = weyl_ratio(&truncated_fractal(None), 1.0 / 128.0);
    let rel = (r - w).abs() / w;
    c.hard(
        "fractal N/lambda within 15%",
        rel < 0.15,
        format!("{r:.4} vs |Ω|/4π = {w:.4} ({:.1}%)", 100.0 * rel),
    );
    c.runtime(t.elapsed(), 1200.0);
}

fn criterion_6(c: &mut Criterion) {
    let t = Instant::now();
    let dom = square(None);
    let w = PotentialField::Tent {
        amplitude: 1.0,
        center: [0.5, 0.5],
        radius: 0.25,
    };
    for lambda in [200.0, 500.0] {
        let mut gaps = Vec::new();
        for m_level in [2, 3] {
            let r = bracketing_check(&dom, &w, m_level, lambda, 1.0 / 64.0, 0.0).unwrap();
            c.hard(
                &format!("sandwich lambda={lambda} m={m_level}"),
                r.holds,
                format!("{} <= {} <= {}", r.sum_dirichlet, r.global, r.sum_neumann),
            );
            gaps.push((r.gap_lower, r.gap_upper));
        }
        let ok = gaps[1].0 <= gaps[0].0 && gaps[1].1 <= gaps[0].1;
        c.reported(
            &format!("gaps non-increasing in m, lambda={lambda}"),
            ok,
            format!(
                "(lower, upper) {:?} -> {:?}; finer cubes shrink the Dirichlet and enlarge the broken Neumann space",
                gaps[0], gaps[1]
            ),
        );
    }
    c.runtime(t.elapsed(), 600.0);
}

fn criterion_7(c: &mut Criterion) {
    let t = Instant::now();
    let deltas: Vec<f64> = (2..=6).map(|k| 2f64.powi(-k)).collect();
    let fit = estimate_poincare_constant(PoincareTemplate::Hat, &deltas, 1.0 / 16.0).unwrap();
    c.hard(
        "Poincaré slope -2 ± 0.1",
        (fit.slope + 2.0).abs() <= 0.1,
        format!("{:.4}, C_P {:.4}", fit.slope, fit.c_p),
    );

    let es = compute_exponents(2, 0.75, 1.0).unwrap();
    let ms = [1u32, 2, 4, 8];
    let mut values = Vec::new();
    for &m in &ms {
        let w = 1.0 / m as f64;
        let est = estimate_ps_constant(
            &[0.0, w],
            &[1.0, 1.0],
            es.qstar,
            (w / 8.0).min(1.0 / 32.0),
            500,
            7,
        )
        .unwrap();
        values.push(est.value);
    }
    let lx: Vec<f64> = ms.iter().map(|m| (*m as f64).ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let slope = theil_sen(&lx, &ly).unwrap();
    let target = -(1.0 - 2.0 / es.qstar);
    c.reported(
        "PS slope within ±0.25 of -(d-1)(1-2/q*)",
        (slope - target).abs() <= 0.25,
        format!(
            "{slope:.3} vs {target:.3}; values {values:.3?}; the minimiser is a 2D mode until M is large"
        ),
    );
    c.runtime(t.elapsed(), 900.0);
}

fn cover_sweep(c: &mut Criterion, label: &str, dom: &HolderSubgraphDomain) {
    let es = compute_exponents(2, dom.gamma, dom.c).unwrap();
    let cfg = CoverConfig::default();
    let deltas = [0.125, 0.0625, 0.03125];
    let mut ks = Vec::new();
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for &d0 in &deltas {
        let cf = greedy_cover(dom, &PotentialField::Zero, d0, &es, &cfg).unwrap();
        let probe = probe_grid(dom, d0, &es, cfg.probe_refine).unwrap();
        let rep = verify_cover(&cf, dom, &probe);
        c.hard(
            &format!("{label} delta0={d0}: disjoint, full coverage"),
            rep.pairwise_disjoint && rep.coverage_fraction == 1.0,
            format!(
                "{} domains, coverage {}, {} probe points",
                rep.total, rep.coverage_fraction, rep.probe_points
            ),
        );
        ks.push(rep.k_used);
        lx.push(d0.ln());
        ly.push((rep.j_sizes.total() as f64 * d0 * d0).ln());
    }
    c.reported(
        &format!("{label} K_used constant"),
        ks.iter().all(|k| *k == ks[0]),
        format!("{ks:?}"),
    );
    let slope = theil_sen(&lx, &ly).unwrap();
    c.hard(
        &format!("{label} |J| delta0^2 slope within ±0.2"),
        slope.abs() <= 0.2,
        format!("{slope:.3}"),
    );
}

fn criterion_8(c: &mut Criterion) {
    let t = Instant::now();
    cover_sweep(c, "flat", &square(None));
    let fractal = build_domain(&DomainSpec::Fractal {
        gamma: 0.6,
        m: 10,
        n_max: 1,
        relaxed: false,
        h_omega: None,
        window: None,
    })
    .unwrap();
    cover_sweep(c, "fractal", &fractal);
    c.runtime(t.elapsed(), 600.0);
}

fn criterion_9(c: &mut Criterion) {
    let t = Instant::now();
    let cfg = ExampleConfig::new(0.6, 10, 2, 0.3).unwrap();
    let ex = build_example(&cfg).unwrap();
    let r1 = certify(&ex, 1, 9).unwrap();
    c.hard(
        "n=1: all 1024 forms negative",
        r1.all_negative && r1.count_lower_bound == 1024 && r1.classes.is_none(),
        format!(
            "{} forms, max {:.3}, lambda {:.3}",
            r1.forms_evaluated, r1.max_total, r1.lambda
        ),
    );
    let r2 = certify(&ex, 2, 9).unwrap();
    c.hard(
        "n=2: every congruence class negative",
        r2.all_negative && r2.symmetry_ok,
        format!(
            "{:?} classes, max {:.4}, symmetry dev {:.1e}",
            r2.classes, r2.max_total, r2.symmetry_max_dev
        ),
    );
    c.hard(
        "form bounds",
        r1.bounds_hold && r2.bounds_hold,
        format!("l2 margin {:.3}/{:.3}", r1.l2_margin, r2.l2_margin),
    );
    let step = r2.log2_ratio - r1.log2_ratio;
    c.hard(
        "ratio(2)/ratio(1) = 2^2.2",
        (step - 2.2).abs() < 1e-12 && r1.ratio > 1.0 && r2.ratio > 1.0,
        format!("log2 step {step}, ratios {:.3}, {:.3}", r1.ratio, r2.ratio),
    );
    let div = boundary_divergence(&ex.domain, &QuadRes::default()).unwrap();
    c.hard(
        "boundary epsilon: seminorm divergent",
        div.divergent,
        format!("shell slope {:.3}", div.shell_slope),
    );
    let range = epsilon_admissible(2, 0.6).unwrap();
    c.hard(
        "f(d) = -1 and f <= -1 on the mu grid",
        (range.cubic_at_d + 1.0).abs() < 1e-12 && range.cubic_max <= -1.0,
        format!("f(d) = {}, max {:.6}", range.cubic_at_d, range.cubic_max),
    );
    c.runtime(t.elapsed(), 1800.0);
}

fn clr(c: &mut Criterion, label: &str, dom: &HolderSubgraphDomain, kind: Kind) {
    let v = PotentialField::constant(-1.0);
    let es = compute_exponents(2, dom.gamma, dom.c).unwrap();
    let grid = [250.0, 500.0, 1000.0, 2000.0];
    let tab = clr_bound_check(dom, &v, &es, &grid, 1.0 / 64.0, &QuadRes::default()).unwrap();
    let scaled: Vec<f64> = tab.rows.iter().map(|r| r.scaled).collect();
    let name = format!("{label}: slope of N delta0^2 within ±0.25");
    let detail = format!("{:.3}, N delta0^2 = {scaled:.4?}", tab.slope);
    let ok = tab.slope.abs() <= 0.25;
    match kind {
        Kind::Hard => c.hard(&name, ok, detail),
        Kind::Reported => c.reported(&name, ok, detail),
        Kind::Info => c.info(&name, ok, detail),
    }
}

fn criterion_10(c: &mut Criterion) {
    let t = Instant::now();
    clr(c, "square", &square(None), Kind::Hard);
    // largest round h_omega with f > 3 h_omega on the chart (min f = 1/8),
    // so that delta0 follows the norm rather than the h_omega cap
    clr(
        c,
        "fractal, h_omega 0.04",
        &truncated_fractal(Some(0.04)),
        Kind::Hard,
    );
    // with h_omega = 1/32 the cap binds up to lambda = 1000
    clr(
        c,
        "fractal, default h_omega",
        &truncated_fractal(None),
        Kind::Info,
    );
    c.runtime(t.elapsed(), 1800.0);
}

type CriterionFn = fn(&mut Criterion);

fn main() {
    let criteria: [(&str, CriterionFn); 10] = [
        ("exponent identities", criterion_1),
        ("fractal boundary", criterion_2),
        ("inertia oracle", criterion_3),
        ("spectral sanity", criterion_4),
        ("Weyl law", criterion_5),
        ("bracketing", criterion_6),
        ("Poincaré scaling", criterion_7),
        ("covering", criterion_8),
        ("counterexample certificate", criterion_9),
        ("CLR diagnostic", criterion_10),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut hard_failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let mut c = Criterion::default();
        f(&mut c);
        let all = c.checks.iter().all(|k| k.ok || k.kind == Kind::Info);
        println!("criterion {id:>2} {}: {name}", verdict(all));
        for k in &c.checks {
            let (mark, tag) = match k.kind {
                Kind::Hard => (verdict(k.ok), ""),
                Kind::Reported => (verdict(k.ok), " (reported)"),
                Kind::Info => ("INFO", ""),
            };
            println!("    {mark} {}{tag}: {}", k.name, k.detail);
            if !k.ok && k.kind == Kind::Hard {
                hard_failures += 1;
            }
        }
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} hard check(s) failed");
        std::process::exit(1);
    }
}
