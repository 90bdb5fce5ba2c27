//! The non-semiclassical example: a fractal subgraph with the potential
//! `V = -b_V h^{(2/d)(eps-1)}`, the oscillating test functions `u_{n,k}`
//! supported in the spikes, and the certificate that `N(-Delta + lambda(n) V)`
//! is at least `2^{(d-1)mn}` while `lambda(n)^{d/2}` grows more slowly.
//!
//! Everything here is quadrature, independent of the finite element code.
//! Only `d = 2` domains are built.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{build_domain, spike_base, DomainSpec, FractalParams, HolderSubgraphDomain};
use crate::error::{invalid, Error, Result};
use crate::exponents::{compute_exponents, ExponentSet};
use crate::norms::{divergence_slope, DivergenceFit, PotentialField};
use crate::quadrature::{gauss_jacobi, gauss_legendre, QuadRes, Rect};

/// Dimension of the built example.
pub const D: u32 = 2;

/// Above this many cells, `certify` evaluates one cell per congruence class.
pub const FULL_BUDGET: u64 = 10_000;

/// Relative agreement required between the two quadrature orders.
const STABLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleConstants {
    /// `2^{-(d-1)} int_0^{1/8} sin^2`
    pub b2: f64,
    /// `int_0^1 cos^2`
    pub bnabla: f64,
    /// `2 bnabla / b2`
    pub bv: f64,
}

pub fn example_constants(d: u32) -> Result<ExampleConstants> {
    if d < 2 {
        return Err(invalid("d", format!("need d >= 2, got {d}")));
    }
    let b2 = 2f64.powi(1 - d as i32) * (1.0 / 16.0 - 0.25f64.sin() / 4.0);
    let bnabla = 0.5 + 2f64.sin() / 4.0;
    Ok(ExampleConstants {
        b2,
        bnabla,
        bv: 2.0 * bnabla / b2,
    })
}

/// Upper end `(d-1)(1/gamma - 1)` of the admissible `epsilon` range.
pub fn epsilon_upper(d: u32, gamma: f64) -> f64 {
    (d as f64 - 1.0) * (1.0 / gamma - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleConfig {
    pub gamma: f64,
    pub m: u32,
    pub n_max: u32,
    pub epsilon: f64,
    pub b2: f64,
    pub bnabla: f64,
    pub bv: f64,
}

impl ExampleConfig {
    pub fn new(gamma: f64, m: u32, n_max: u32, epsilon: f64) -> Result<Self> {
        let k = example_constants(D)?;
        let cfg = Self {
            gamma,
            m,
            n_max,
            epsilon,
            b2: k.b2,
            bnabla: k.bnabla,
            bv: k.bv,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `epsilon` at the default of [`epsilon_admissible`].
    pub fn with_default_epsilon(gamma: f64, m: u32, n_max: u32) -> Result<Self> {
        let eps = epsilon_admissible(D, gamma)?.default_epsilon;
        Self::new(gamma, m, n_max, eps)
    }

    pub fn validate(&self) -> Result<()> {
        let lo = ExponentSet::gamma_min(D);
        if !(self.gamma > lo && self.gamma < 1.0) {
            return Err(invalid(
                "gamma",
                format!("need {lo} < gamma < 1, got {}", self.gamma),
            ));
        }
        FractalParams::new(self.gamma, self.m, self.n_max)?;
        let up = epsilon_upper(D, self.gamma);
        if !(self.epsilon > 0.0 && self.epsilon < up.min(1.0)) {
            return Err(invalid(
                "epsilon",
                format!("need 0 < epsilon < {}, got {}", up.min(1.0), self.epsilon),
            ));
        }
        let k = example_constants(D)?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        if !(close(self.b2, k.b2) && close(self.bnabla, k.bnabla) && close(self.bv, k.bv)) {
            return Err(invalid("b2", "constants differ from example_constants"));
        }
        Ok(())
    }

    /// Exponent `(2/d)(epsilon - 1)` of the height in `V`.
    pub fn height_exponent(&self) -> f64 {
        2.0 / D as f64 * (self.epsilon - 1.0)
    }

    pub fn params(&self) -> FractalParams {
        FractalParams {
            gamma: self.gamma,
            m: self.m,
            n_max: self.n_max,
        }
    }
}

/// The built example: configuration, domain and potential.
#[derive(Debug, Clone)]
pub struct Example {
    pub cfg: ExampleConfig,
    pub domain: HolderSubgraphDomain,
    pub potential: PotentialField,
}

pub fn build_example(cfg: &ExampleConfig) -> Result<Example> {
    cfg.validate()?;
    let domain = build_domain(&DomainSpec::Fractal {
        gamma: cfg.gamma,
        m: cfg.m,
        n_max: cfg.n_max,
        relaxed: false,
        h_omega: None,
        window: None,
    })?;
    let potential = PotentialField::HeightPower {
        coef: cfg.bv,
        exponent: cfg.height_exponent(),
    };
    Ok(Example {
        cfg: *cfg,
        domain,
        potential,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRange {
    pub d: u32,
    pub gamma: f64,
    /// Open interval `(0, upper)`.
    pub upper: f64,
    /// `V` is in `L^{p*}` iff `epsilon > lp_threshold`.
    pub lp_threshold: f64,
    /// `p* (2/d)(upper - 1)`; must exceed `-1`.
    pub eps_check_at_upper: f64,
    pub eps_check_holds: bool,
    /// `mu (mu - (d+1)) + d`, positive iff the check holds.
    pub mu_margin: f64,
    /// Seminorm height exponent `ptilde (2/d)(upper-1) - beta` at this gamma.
    pub seminorm_exponent_at_upper: f64,
    pub cubic_at_d: f64,
    /// Largest cubic value over the open grid on `(d, d+1)`.
    pub cubic_max: f64,
    pub cubic_decreasing: bool,
    /// Midpoint of the admissible part of `(lp_threshold, min(1, upper))`.
    pub default_epsilon: f64,
}

/// `(1/d^2) mu^2 (mu - (d+1)) - mu/(d+1) (mu^2/d - d)`.
pub fn seminorm_cubic(d: u32, mu: f64) -> f64 {
    let df = d as f64;
    mu * mu * (mu - (df + 1.0)) / (df * df) - mu / (df + 1.0) * (mu * mu / df - df)
}

const CUBIC_GRID: usize = 10_000;

pub fn epsilon_admissible(d: u32, gamma: f64) -> Result<EpsilonRange> {
    let lo = ExponentSet::gamma_min(d.max(2));
    if !(gamma > lo && gamma < 1.0) {
        return Err(invalid(
            "gamma",
            format!("need {lo} < gamma < 1, got {gamma}"),
        ));
    }
    let es = compute_exponents(d, gamma, 1.0)?;
    let df = d as f64;
    let upper = epsilon_upper(d, gamma);
    let eps_check_at_upper = es.pstar * 2.0 / df * (upper - 1.0);
    let lp_threshold = (1.0 - df / (2.0 * es.pstar)).max(0.0);
    let mu = es.mu;
    let mut cubic_max = f64::NEG_INFINITY;
    let mut cubic_decreasing = true;
    let mut prev = seminorm_cubic(d, df);
    for i in 1..=CUBIC_GRID {
        let v = seminorm_cubic(d, df + i as f64 / (CUBIC_GRID + 1) as f64);
        cubic_max = cubic_max.max(v);
        cubic_decreasing &= v < prev;
        prev = v;
    }
    let hi = upper.min(1.0);
    Ok(EpsilonRange {
        d,
        gamma,
        upper,
        lp_threshold,
        eps_check_at_upper,
        eps_check_holds: eps_check_at_upper > -1.0,
        mu_margin: mu * (mu - (df + 1.0)) + df,
        seminorm_exponent_at_upper: seminorm_cubic(d, mu),
        cubic_at_d: seminorm_cubic(d, df),
        cubic_max,
        cubic_decreasing,
        default_epsilon: 0.5 * (lp_threshold.min(hi) + hi),
    })
}

/// `lambda(n) = 2^{2 gamma m n (1 + (epsilon - 1)/d)}`, kept in log form too.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambda {
    pub n: u32,
    pub log2: f64,
    /// `inf` once `2^log2` overflows.
    pub value: f64,
}

pub fn lambda_schedule(cfg: &ExampleConfig, n: u32) -> Lambda {
    let log2 = 2.0 * cfg.gamma * (cfg.m * n) as f64 * (1.0 + (cfg.epsilon - 1.0) / D as f64);
    Lambda {
        n,
        log2,
        value: 2f64.powf(log2),
    }
}

/// `log2` of `lambda(n)^{-d/2} 2^{(d-1)mn}`, i.e. `mn[(d-1) - gamma(d-1+eps)]`.
/// Valid for any `epsilon`, including the boundary value.
pub fn ratio_log2(d: u32, gamma: f64, m: u32, epsilon: f64, n: u32) -> f64 {
    let df = d as f64;
    (m * n) as f64 * ((df - 1.0) - gamma * (df - 1.0 + epsilon))
}

/// Quadratic form pieces of `u_{n,k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighForm {
    pub n: u32,
    pub k: u64,
    pub lambda: f64,
    /// `int |grad u|^2`
    pub grad: f64,
    /// `int V |u|^2` (not scaled by lambda)
    pub pot: f64,
    /// `grad + lambda pot`
    pub total: f64,
    /// `int |u|^2`
    pub l2: f64,
}

/// Lower bound on `int |u|^2` and upper bound on `int |grad u|^2`.
pub fn form_bounds(cfg: &ExampleConfig, n: u32) -> (f64, f64) {
    let mn = (cfg.m * n) as f64;
    let cells = 2f64.powf(-(D as f64 - 1.0) * mn);
    let osc = 2f64.powf(cfg.gamma * mn);
    (cfg.b2 * cells / osc, cfg.bnabla * cells * osc)
}

/// `int_0^z sin^2`, with a series near 0 where the closed form cancels.
fn sin2_int(z: f64) -> f64 {
    if z.abs() < 0.1 {
        let z2 = z * z;
        z * z2
            * (1.0 / 3.0
                + z2 * (-1.0 / 15.0
                    + z2 * (2.0 / 315.0 + z2 * (-1.0 / 2835.0 + z2 * 2.0 / 155_925.0))))
    } else {
        z / 2.0 - (2.0 * z).sin() / 4.0
    }
}

struct Cell {
    omega: f64,
    alpha: f64,
    dx: f64,
    /// `f - a` at the breakpoints of the cell.
    h: Vec<f64>,
}

impl Cell {
    fn new(ex: &Example, n: u32, k: u64) -> Result<Self> {
        let cfg = &ex.cfg;
        let p = cfg.params();
        if n > cfg.n_max {
            return Err(invalid("n", format!("{n} exceeds n_max = {}", cfg.n_max)));
        }
        if k >= p.cells(n) {
            return Err(invalid("k", format!("{k} not in K_{n}")));
        }
        let a = spike_base(&p, n, k)?;
        let per = 1usize << (cfg.m * (cfg.n_max - n) + 1);
        let i0 = k as usize * per;
        let ys = &ex.domain.profile.ys[i0..=i0 + per];
        Ok(Self {
            omega: 2f64.powf(cfg.gamma * (cfg.m * n) as f64),
            alpha: cfg.height_exponent(),
            dx: p.breakpoint_spacing(cfg.n_max),
            h: ys.iter().map(|y| y - a).collect(),
        })
    }

    /// `G(u) = int_0^u sin^2(omega s) ds`.
    fn g(&self, u: f64) -> f64 {
        sin2_int(self.omega * u) / self.omega
    }

    /// `J(H) = int_0^H t^alpha G(H - t) dt`; `J' = P`.
    fn j(&self, h: f64, order: usize) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let r = gauss_jacobi(order, self.alpha);
        let s: f64 =
            r.x.iter()
                .zip(&r.w)
                .map(|(x, w)| w * self.g(h * (1.0 - x)))
                .sum();
        h.powf(self.alpha + 1.0) * s
    }

    /// `P(H) = int_0^H t^alpha sin^2(omega (H - t)) dt`.
    fn p(&self, h: f64, order: usize) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let r = gauss_jacobi(order, self.alpha);
        let s: f64 =
            r.x.iter()
                .zip(&r.w)
                .map(|(x, w)| w * (self.omega * h * (1.0 - x)).sin().powi(2))
                .sum();
        h.powf(self.alpha + 1.0) * s
    }

    /// `(l2, grad, int t^alpha sin^2)` with the last at the given order.
    fn integrate(&self, order: usize) -> (f64, f64, f64) {
        let gl = gauss_legendre(8);
        let om = self.omega;
        let jv: Vec<f64> = self.h.iter().map(|&h| self.j(h, order)).collect();
        let (mut l2, mut grad, mut pot) = (0.0, 0.0, 0.0);
        for i in 0..self.h.len() - 1 {
            let (mut h0, mut h1) = (self.h[i], self.h[i + 1]);
            if h0 <= 0.0 && h1 <= 0.0 {
                continue;
            }
            let (mut j0, mut j1) = (jv[i], jv[i + 1]);
            let mut dx = self.dx;
            // clip to the part above a
            if h0 < 0.0 {
                dx *= h1 / (h1 - h0);
                h0 = 0.0;
                j0 = 0.0;
            } else if h1 < 0.0 {
                dx *= h0 / (h0 - h1);
                h1 = 0.0;
                j1 = 0.0;
            }
            for (x, w) in gl.x.iter().zip(&gl.w) {
                let h = h0 + (h1 - h0) * x;
                let z = om * h;
                l2 += w * dx * sin2_int(z) / om;
                // int_0^H omega^2 cos^2 = omega^2 H - omega int sin^2
                grad += w * dx * om * (z - sin2_int(z));
            }
            let dh = h1 - h0;
            pot += if dh.abs() > 1e-6 * h0.max(h1) {
                dx * (j1 - j0) / dh
            } else {
                dx * self.p(0.5 * (h0 + h1), order)
            };
        }
        (l2, grad, pot)
    }
}

const POT_ORDER: usize = 12;

/// Cell integrals `(l2, grad, pot)` with `pot = int V |u|^2`.
fn cell_integrals(ex: &Example, n: u32, k: u64) -> Result<(f64, f64, f64)> {
    let cell = Cell::new(ex, n, k)?;
    let (l2, grad, p1) = cell.integrate(POT_ORDER);
    let (_, _, p2) = cell.integrate(2 * POT_ORDER);
    if (p1 - p2).abs() > STABLE_TOL * p2.abs() {
        return Err(Error::NoStabilization(format!(
            "potential term of u_({n},{k}): {p1} vs {p2}"
        )));
    }
    Ok((l2, grad, -ex.cfg.bv * p2))
}

pub fn rayleigh_form(ex: &Example, n: u32, k: u64, lambda: f64) -> Result<RayleighForm> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(
            "lambda",
            format!("need finite lambda >= 0, got {lambda}"),
        ));
    }
    let (l2, grad, pot) = cell_integrals(ex, n, k)?;
    Ok(RayleighForm {
        n,
        k,
        lambda,
        grad,
        pot,
        total: grad + lambda * pot,
        l2,
    })
}

/// Closed rectangle containing the support of `u_{n,k}`.
pub fn support_rect(ex: &Example, n: u32, k: u64) -> Result<Rect> {
    let p = ex.cfg.params();
    let a = spike_base(&p, n, k)?;
    let w = p.cell_width(n);
    let x0 = k as f64 * w;
    let top = ex.domain.profile.max_on(x0, x0 + w);
    Ok(Rect::new(x0, x0 + w, a, top.max(a)))
}

/// Slope signs of the levels below `n` at cell `k`. Cells with equal keys
/// differ only by a vertical shift of `f`.
pub fn congruence_key(cfg: &ExampleConfig, n: u32, k: u64) -> u64 {
    let mut key = 0;
    for j in 0..n {
        let shift = cfg.m * (n - j);
        let offset = k & ((1u64 << shift) - 1);
        if offset < 1u64 << (shift - 1) {
            key |= 1 << j;
        }
    }
    key
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OffendingForm {
    pub k: u64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertReport {
    pub n: u32,
    pub lambda: f64,
    pub log2_lambda: f64,
    pub all_negative: bool,
    pub count_lower_bound: u64,
    pub ratio: f64,
    pub log2_ratio: f64,
    /// Forms actually integrated (class representatives when subsampled).
    pub forms_evaluated: usize,
    /// Congruence classes; `None` when every cell was evaluated.
    pub classes: Option<usize>,
    /// Largest total over the evaluated forms.
    pub max_total: f64,
    /// `min l2 / lower bound`, at least 1 when the bound holds.
    pub l2_margin: f64,
    /// `max grad / upper bound`, at most 1 when the bound holds.
    pub grad_margin: f64,
    pub bounds_hold: bool,
    pub symmetry_pairs: usize,
    /// Largest relative difference of the totals over the checked pairs.
    pub symmetry_max_dev: f64,
    pub symmetry_ok: bool,
    pub offending: Option<OffendingForm>,
}

impl CertReport {
    /// `Err(CertificateVoid)` unless every form is negative.
    pub fn into_result(self) -> Result<Self> {
        match self.offending {
            Some(o) => Err(Error::CertificateVoid {
                k: o.k as usize,
                value: o.total,
            }),
            None if !self.all_negative => Err(Error::CertificateVoid {
                k: usize::MAX,
                value: f64::NAN,
            }),
            None => Ok(self),
        }
    }
}

const SYMMETRY_PAIRS: usize = 10;
const SYMMETRY_TOL: f64 = 1e-9;

pub fn certify(ex: &Example, n: u32, seed: u64) -> Result<CertReport> {
    let cfg = &ex.cfg;
    if n > cfg.n_max {
        return Err(invalid("n", format!("{n} exceeds n_max = {}", cfg.n_max)));
    }
    let lam = lambda_schedule(cfg, n);
    let cells = cfg.params().cells(n);
    let (l2_lo, grad_hi) = form_bounds(cfg, n);
    let mut reps: Vec<u64> = Vec::new();
    let mut classes = None;
    if cells <= FULL_BUDGET {
        reps.extend(0..cells);
    } else {
        let mut first: BTreeMap<u64, u64> = BTreeMap::new();
        for k in 0..cells {
            first.entry(congruence_key(cfg, n, k)).or_insert(k);
        }
        classes = Some(first.len());
        reps.extend(first.values());
    }

    let mut max_total = f64::NEG_INFINITY;
    let mut l2_margin = f64::INFINITY;
    let mut grad_margin: f64 = 0.0;
    let mut offending = None;
    for &k in &reps {
        let f = rayleigh_form(ex, n, k, lam.value)?;
        max_total = max_total.max(f.total);
        l2_margin = l2_margin.min(f.l2 / l2_lo);
        grad_margin = grad_margin.max(f.grad / grad_hi);
        if !(f.total < 0.0) && offending.is_none() {
            offending = Some(OffendingForm { k, total: f.total });
        }
    }

    let mut symmetry_pairs = 0;
    let mut symmetry_max_dev: f64 = 0.0;
    if classes.is_some() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while symmetry_pairs < SYMMETRY_PAIRS {
            let k1 = rng.random_range(0..cells);
            let key = congruence_key(cfg, n, k1);
            let k2 = loop {
                let k = rng.random_range(0..cells);
                if k != k1 && congruence_key(cfg, n, k) == key {
                    break k;
                }
            };
            let f1 = rayleigh_form(ex, n, k1, lam.value)?;
            let f2 = rayleigh_form(ex, n, k2, lam.value)?;
            symmetry_max_dev = symmetry_max_dev.max((f1.total - f2.total).abs() / f1.total.abs());
            symmetry_pairs += 1;
        }
    }
    let symmetry_ok = symmetry_max_dev <= SYMMETRY_TOL;
    let log2_ratio = ratio_log2(D, cfg.gamma, cfg.m, cfg.epsilon, n);
    let tol = 1e-12;
    Ok(CertReport {
        n,
        lambda: lam.value,
        log2_lambda: lam.log2,
        all_negative: offending.is_none() && symmetry_ok,
        count_lower_bound: cells,
        ratio: 2f64.powf(log2_ratio),
        log2_ratio,
        forms_evaluated: reps.len(),
        classes,
        max_total,
        l2_margin,
        grad_margin,
        bounds_hold: l2_margin >= 1.0 - tol && grad_margin <= 1.0 + tol,
        symmetry_pairs,
        symmetry_max_dev,
        symmetry_ok,
        offending,
    })
}

/// `V` at the boundary value `epsilon = (d-1)(1/gamma - 1)`, where the
/// weighted seminorm must diverge.
pub fn boundary_potential(gamma: f64) -> Result<PotentialField> {
    let k = example_constants(D)?;
    Ok(PotentialField::HeightPower {
        coef: k.bv,
        exponent: 2.0 / D as f64 * (epsilon_upper(D, gamma) - 1.0),
    })
}

/// Divergence fit of `|V|_{ptilde,beta}` at the boundary `epsilon` on `dom`.
pub fn boundary_divergence(dom: &HolderSubgraphDomain, res: &QuadRes) -> Result<DivergenceFit> {
    let es = compute_exponents(D, dom.gamma, dom.c)?;
    let v = boundary_potential(dom.gamma)?;
    let grid: Vec<f64> = (2..=8).map(|i| 10f64.powi(-i)).collect();
    divergence_slope(&v, dom, es.ptilde, es.beta, &grid, res)
}
