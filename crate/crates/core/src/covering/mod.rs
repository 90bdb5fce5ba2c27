//! Oscillatory domains, the choice of their size, and a greedy covering of
//! the domain by families of pairwise disjoint ones.
//!
//! Every set here is an open rectangle intersected with the domain, so
//! disjointness and containment reduce to interval arithmetic plus the
//! maximum or minimum of `f` over an interval, which is exact for the
//! piecewise linear profile.

mod index;

use serde::{Deserialize, Serialize};

use crate::domain::{HolderSubgraphDomain, Point, BASE_DEPTH, BASE_HALF_WIDTH};
use crate::error::{invalid, Error, Result};
use crate::exponents::ExponentSet;
use crate::norms::rect_height_integral;
use crate::norms::{lp_norm_on, luxemburg, orlicz_norm_on, power_integral, PotentialField, Young};
use crate::quadrature::{gauss_legendre, QuadRes, Rect, Region};

pub use index::BucketIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    /// `a = delta`: a full cube.
    CuboidAEqDelta,
    /// `a = c0 h^{1/gamma} < delta`: a full cuboid.
    CuboidAEqC0h,
    /// `a = c2 delta^{1/gamma}`: may be cut by the graph.
    GraphCapped,
    /// Cube of side `delta` away from the boundary layer.
    InteriorCube,
    /// Cube intersected with the domain, for boundary-layer points outside
    /// the chart layer.
    ClippedCube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    Interior,
    Case1,
    Case2,
    Case3,
}

/// Greedy class; each class is covered separately and gets its own
/// families. Interior and clipped cubes form one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoverClass {
    A1,
    A2,
    A3,
    Cubes,
}

const CLASS_ORDER: [CoverClass; 4] = [
    CoverClass::A3,
    CoverClass::A1,
    CoverClass::A2,
    CoverClass::Cubes,
];

/// `D = rect(center; a/2, delta/2)` intersected with the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryDomain {
    pub center: Point,
    pub delta: f64,
    pub a: f64,
    pub kind: DomainKind,
    pub case_tag: CaseTag,
    /// `f(x') - x_d` at the center; `NaN` off the subgraph.
    pub h_center: f64,
}

impl OscillatoryDomain {
    pub fn rect(&self) -> Rect {
        Rect::centered(
            self.center[0],
            self.center[1],
            0.5 * self.a,
            0.5 * self.delta,
        )
    }

    /// `M = delta / a`.
    pub fn m_ratio(&self) -> f64 {
        self.delta / self.a
    }

    pub fn class(&self) -> CoverClass {
        match self.kind {
            DomainKind::CuboidAEqDelta => CoverClass::A3,
            DomainKind::CuboidAEqC0h => CoverClass::A1,
            DomainKind::GraphCapped => CoverClass::A2,
            DomainKind::ClippedCube | DomainKind::InteriorCube => CoverClass::Cubes,
        }
    }

    fn is_cuboid(&self) -> bool {
        matches!(
            self.kind,
            DomainKind::CuboidAEqDelta | DomainKind::CuboidAEqC0h | DomainKind::InteriorCube
        )
    }
}

/// `min(delta, c0 max(h, c1 delta)^{1/gamma})`.
pub fn side_a(es: &ExponentSet, h: f64, delta: f64) -> f64 {
    delta.min(throttle(es, h, delta))
}

fn throttle(es: &ExponentSet, h: f64, delta: f64) -> f64 {
    es.c0 * h.max(es.c1 * delta).powf(1.0 / es.gamma)
}

/// Oscillatory domain at a chart-layer point.
pub fn make_oscillatory_domain(
    dom: &HolderSubgraphDomain,
    x: Point,
    delta: f64,
    es: &ExponentSet,
) -> Result<OscillatoryDomain> {
    if !dom.in_chart_layer(x) {
        return Err(Error::ChartMiss { x: x[0], y: x[1] });
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid("delta", format!("need delta > 0, got {delta}")));
    }
    let h = dom.height(x);
    let t = throttle(es, h, delta);
    let kind = if delta <= t {
        DomainKind::CuboidAEqDelta
    } else if h >= es.c1 * delta {
        DomainKind::CuboidAEqC0h
    } else {
        DomainKind::GraphCapped
    };
    Ok(OscillatoryDomain {
        center: x,
        delta,
        a: delta.min(t),
        kind,
        case_tag: CaseTag::Case1,
        h_center: h,
    })
}

fn cube_domain(
    dom: &HolderSubgraphDomain,
    x: Point,
    delta: f64,
    kind: DomainKind,
) -> OscillatoryDomain {
    OscillatoryDomain {
        center: x,
        delta,
        a: delta,
        kind,
        case_tag: CaseTag::Interior,
        h_center: if dom.in_subgraph(x) {
            dom.height(x)
        } else {
            f64::NAN
        },
    }
}

// ---------------------------------------------------------------------------
// exact geometry

fn overlap(a: &Rect, b: &Rect) -> bool {
    a.x0.max(b.x0) < a.x1.min(b.x1) && a.y0.max(b.y0) < a.y1.min(b.y1)
}

/// Does the open rectangle `r` meet the domain?
pub fn rect_meets_domain(dom: &HolderSubgraphDomain, r: &Rect) -> bool {
    if r.is_empty() {
        return false;
    }
    if dom.base_box
        && r.x0 < BASE_HALF_WIDTH
        && r.x1 > -BASE_HALF_WIDTH
        && r.y0 < 0.0
        && r.y1 > -BASE_DEPTH
    {
        return true;
    }
    let (xa, xb) = (r.x0.max(0.0), r.x1.min(1.0));
    xa < xb && r.y1 > dom.floor() && r.y0 < dom.profile.max_on(xa, xb)
}

/// A point of the closed rectangle outside the domain, if any.
fn rect_outside_witness(dom: &HolderSubgraphDomain, r: &Rect) -> Option<Point> {
    let cx = 0.5 * (r.x0 + r.x1);
    if r.y0 < dom.floor() {
        return Some([cx, r.y0]);
    }
    if r.y0 < 0.0 && (r.x0 < -BASE_HALF_WIDTH || r.x1 > BASE_HALF_WIDTH) {
        let x = if r.x0 < -BASE_HALF_WIDTH { r.x0 } else { r.x1 };
        return Some([x, r.y0]);
    }
    if r.y1 > 0.0 {
        if r.x0 < 0.0 || r.x1 > 1.0 {
            let x = if r.x0 < 0.0 { r.x0 } else { r.x1 };
            return Some([x, r.y1]);
        }
        let (x, fmin) = extremum(dom, r.x0, r.x1, false);
        if fmin < r.y1 {
            return Some([x, r.y1]);
        }
    }
    None
}

/// Is the open rectangle inside the domain?
pub fn rect_inside_domain(dom: &HolderSubgraphDomain, r: &Rect) -> bool {
    rect_outside_witness(dom, r).is_none()
}

/// `(argmax, max)` or `(argmin, min)` of `f` over `[a, b]`, by breakpoint scan.
fn extremum(dom: &HolderSubgraphDomain, a: f64, b: f64, max: bool) -> (f64, f64) {
    let pr = &dom.profile;
    let (a, b) = (a.max(0.0), b.min(1.0));
    let better = |v: f64, best: f64| if max { v > best } else { v < best };
    let mut best = (a, pr.eval(a));
    let fb = pr.eval(b);
    if better(fb, best.1) {
        best = (b, fb);
    }
    let mut i = pr.piece(a) + 1;
    while i < pr.len() && pr.xs[i] < b {
        if better(pr.ys[i], best.1) {
            best = (pr.xs[i], pr.ys[i]);
        }
        i += 1;
    }
    best
}

/// Exact area of `r` intersected with the domain.
pub fn area_in_domain(dom: &HolderSubgraphDomain, r: &Rect) -> f64 {
    let base = if dom.base_box {
        r.intersect(&Rect::new(
            -BASE_HALF_WIDTH,
            BASE_HALF_WIDTH,
            -BASE_DEPTH,
            0.0,
        ))
        .area()
    } else {
        0.0
    };
    base + rect_height_integral(dom, r, 0.0, 0.0)
}

// ---------------------------------------------------------------------------
// delta selection

/// Constants left open by the size conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverConfig {
    /// Orlicz threshold: cubes with `|V|_B <= theta` are accepted.
    pub theta: f64,
    /// Factor in front of `max(h/(c1 delta), 1)^{(d-1)/gamma}`.
    pub kappa: f64,
    pub young: Young,
    /// Probe spacing divisor (1 = default spacing).
    pub probe_refine: f64,
    /// Relative accuracy of the delta bisections.
    pub rel_tol: f64,
    pub quad: QuadRes,
}

impl Default for CoverConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            kappa: 1.0,
            young: Young::LLogL,
            probe_refine: 1.0,
            rel_tol: 1e-3,
            quad: QuadRes::default(),
        }
    }
}

impl CoverConfig {
    /// Threshold `1/(2 C_PS)` from a measured Poincare-Sobolev constant.
    pub fn with_ps_constant(c_ps: f64) -> Result<Self> {
        if !(c_ps > 0.0) || !c_ps.is_finite() {
            return Err(invalid("c_ps", "must be positive"));
        }
        Ok(Self {
            theta: 0.5 / c_ps,
            ..Self::default()
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) || !(self.kappa > 0.0) {
            return Err(invalid("theta/kappa", "must be positive"));
        }
        if !(self.probe_refine > 0.0) {
            return Err(invalid("probe_refine", "must be positive"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(invalid("rel_tol", "need 0 < rel_tol < 1"));
        }
        Ok(())
    }
}

/// Where a point sits relative to the boundary layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    /// At least `sqrt(d)/2 * delta0` from the boundary.
    Interior,
    /// Boundary layer and chart layer.
    Oscillatory,
    /// Boundary layer outside the chart layer.
    Clipped,
}

pub fn classify_point(dom: &HolderSubgraphDomain, x: Point, delta0: f64, d: u32) -> PointClass {
    let r = 0.5 * (d as f64).sqrt() * delta0;
    if dom.dist_to_boundary(x) >= r {
        PointClass::Interior
    } else if dom.in_chart_layer(x) {
        PointClass::Oscillatory
    } else {
        PointClass::Clipped
    }
}

struct Selector<'a> {
    dom: &'a HolderSubgraphDomain,
    v: &'a PotentialField,
    es: &'a ExponentSet,
    cfg: &'a CoverConfig,
}

impl Selector<'_> {
    /// Luxemburg norm of `V` on `r` intersected with the domain.
    fn orlicz(&self, r: &Rect) -> Result<f64> {
        if self.v.singular_exponent() == 0.0 && rect_inside_domain(self.dom, r) {
            // smooth enough for a tensor rule
            let g = gauss_legendre(8);
            let (w, hgt) = (r.x1 - r.x0, r.y1 - r.y0);
            let mut vals = Vec::with_capacity(64);
            for (tx, wx) in g.x.iter().zip(&g.w) {
                for (ty, wy) in g.x.iter().zip(&g.w) {
                    let p = [r.x0 + tx * w, r.y0 + ty * hgt];
                    let a = self.v.value(self.dom, p).abs();
                    if a > 0.0 {
                        vals.push((wx * wy * w * hgt, a));
                    }
                }
            }
            if vals.is_empty() {
                return Ok(0.0);
            }
            return luxemburg(&vals, self.cfg.young);
        }
        orlicz_norm_on(
            self.v,
            self.dom,
            &Region::rect(*r),
            self.cfg.young,
            &self.cfg.quad,
        )
    }

    /// `int_{D} |V|^{ptilde}`, infinite when not integrable.
    fn n3(&self, r: &Rect) -> Result<f64> {
        match power_integral(
            self.v,
            self.dom,
            &Region::rect(*r),
            self.es.ptilde,
            0.0,
            &self.cfg.quad,
        ) {
            Err(Error::NonIntegrable { .. }) => Ok(f64::INFINITY),
            other => other,
        }
    }

    fn rhs3(&self, h: f64, delta: f64) -> f64 {
        self.cfg.kappa * (h / (self.es.c1 * delta)).max(1.0).powf(self.es.dg())
    }

    fn osc_rect(&self, x: Point, h: f64, delta: f64) -> Rect {
        Rect::centered(x[0], x[1], 0.5 * side_a(self.es, h, delta), 0.5 * delta)
    }

    fn cube_ok(&self, x: Point, delta: f64) -> Result<bool> {
        Ok(self.orlicz(&Rect::centered(x[0], x[1], 0.5 * delta, 0.5 * delta))? <= self.cfg.theta)
    }

    /// Largest `delta <= hi` with `ok(delta)`, for `ok` true on an initial segment.
    fn largest_ok(
        &self,
        lo: Option<f64>,
        hi: f64,
        mut ok: impl FnMut(f64) -> Result<bool>,
    ) -> Result<f64> {
        if ok(hi)? {
            return Ok(hi);
        }
        let mut hi = hi;
        let mut lo = match lo {
            Some(l) => l,
            None => {
                let mut l = 0.5 * hi;
                let mut n = 0;
                while !ok(l)? {
                    hi = l;
                    l *= 0.5;
                    n += 1;
                    if n > 200 {
                        return Err(Error::NotBracketed {
                            lo: l,
                            hi,
                            f_lo: f64::NAN,
                            f_hi: f64::NAN,
                        });
                    }
                }
                l
            }
        };
        while hi / lo > 1.0 + self.cfg.rel_tol {
            let mid = (lo * hi).sqrt();
            if ok(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    fn select(&self, x: Point, delta0: f64) -> Result<(f64, CaseTag)> {
        let class = classify_point(self.dom, x, delta0, self.es.d);
        if self.v.is_zero() {
            let tag = match class {
                PointClass::Oscillatory => CaseTag::Case1,
                _ => CaseTag::Interior,
            };
            return Ok((delta0, tag));
        }
        if class != PointClass::Oscillatory {
            let d = self.largest_ok(None, delta0, |d| self.cube_ok(x, d))?;
            return Ok((d, CaseTag::Interior));
        }
        let h = self.dom.height(x);
        let es = self.es;
        if throttle(es, h, delta0) > delta0 {
            // a(delta) = delta for every delta <= delta0
            if self.cube_ok(x, delta0)? {
                return Ok((delta0, CaseTag::Case1));
            }
            let d = self.largest_ok(None, delta0, |d| self.cube_ok(x, d))?;
            return Ok((d, CaseTag::Case2));
        }
        let ok3 =
            |d: f64| -> Result<bool> { Ok(self.n3(&self.osc_rect(x, h, d))? <= self.rhs3(h, d)) };
        if ok3(delta0)? {
            return Ok((delta0, CaseTag::Case1));
        }
        let dc = es.c0 * h.powf(1.0 / es.gamma);
        if ok3(dc)? {
            let d = self.largest_ok(Some(dc), delta0, ok3)?;
            return Ok((d, CaseTag::Case3));
        }
        if self.cube_ok(x, dc)? {
            return Ok((dc, CaseTag::Case3));
        }
        let d = self.largest_ok(None, dc, |d| self.cube_ok(x, d))?;
        Ok((d, CaseTag::Case2))
    }
}

/// Size `delta` for the domain at `x` and which condition fixed it.
pub fn select_delta(
    dom: &HolderSubgraphDomain,
    v: &PotentialField,
    x: Point,
    delta0: f64,
    es: &ExponentSet,
    cfg: &CoverConfig,
) -> Result<(f64, CaseTag)> {
    check_inputs(dom, v, delta0, es, cfg)?;
    if !dom.contains(x) {
        return Err(Error::ChartMiss { x: x[0], y: x[1] });
    }
    Selector { dom, v, es, cfg }.select(x, delta0)
}

fn check_inputs(
    dom: &HolderSubgraphDomain,
    v: &PotentialField,
    delta0: f64,
    es: &ExponentSet,
    cfg: &CoverConfig,
) -> Result<()> {
    v.validate()?;
    cfg.validate()?;
    if !(delta0 > 0.0 && delta0 <= 1.0) {
        return Err(invalid(
            "delta0",
            format!("need 0 < delta0 <= 1, got {delta0}"),
        ));
    }
    if es.gamma != dom.gamma || es.c != dom.c || es.d != 2 {
        return Err(invalid(
            "exponents",
            "must be computed for d = 2 and the domain's gamma and c",
        ));
    }
    Ok(())
}

/// Domain at `x` with its selected size.
fn candidate(sel: &Selector, x: Point, delta0: f64) -> Result<OscillatoryDomain> {
    let (delta, tag) = sel.select(x, delta0)?;
    Ok(match classify_point(sel.dom, x, delta0, sel.es.d) {
        PointClass::Interior => cube_domain(sel.dom, x, delta, DomainKind::InteriorCube),
        PointClass::Clipped => cube_domain(sel.dom, x, delta, DomainKind::ClippedCube),
        PointClass::Oscillatory => OscillatoryDomain {
            case_tag: tag,
            ..make_oscillatory_domain(sel.dom, x, delta, sel.es)?
        },
    })
}

// ---------------------------------------------------------------------------
// probe grid and greedy cover

/// Probe points: a lattice of spacing `delta0/5` over the domain, plus
/// columns `c2 delta0^{1/gamma} / 2.5` apart in the boundary layer under the
/// graph, where the thinnest domains sit.
pub fn probe_grid(
    dom: &HolderSubgraphDomain,
    delta0: f64,
    es: &ExponentSet,
    refine: f64,
) -> Result<Vec<Point>> {
    if !(delta0 > 0.0 && delta0 <= 1.0) || !(refine > 0.0) {
        return Err(invalid(
            "delta0/refine",
            "need 0 < delta0 <= 1 and refine > 0",
        ));
    }
    let s = delta0 / (5.0 * refine);
    let [bx0, bx1, by0, by1] = dom.bbox();
    let mut pts = Vec::new();
    let mut x = bx0 + 0.5 * s;
    while x < bx1 {
        let mut y = by0 + 0.5 * s;
        while y < by1 {
            if dom.contains([x, y]) {
                pts.push([x, y]);
            }
            y += s;
        }
        x += s;
    }
    let sx = es.c2 * delta0.powf(1.0 / es.gamma) / (2.5 * refine);
    if sx < s {
        let r = 0.5 * (es.d as f64).sqrt() * delta0;
        let (w0, w1) = (dom.window.0 + dom.h_omega, dom.window.1 - dom.h_omega);
        let mut x = w0 + 0.5 * sx;
        while x < w1 {
            let fx = dom.f(x);
            let lo = (dom.profile.min_on(x - r, x + r) - r).max(dom.h_omega);
            let mut y = fx - 0.5 * s;
            while y > lo {
                if dom.dist_to_boundary([x, y]) < r {
                    pts.push([x, y]);
                }
                y -= s;
            }
            x += sx;
        }
    }
    Ok(pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverRegion {
    BoundaryLayer,
    Interior,
    Full,
}

/// Emitted domains in emission order with their family index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverFamilies {
    pub domains: Vec<OscillatoryDomain>,
    pub family: Vec<usize>,
    /// Total number of families; each class has its own.
    pub k_used: usize,
    pub k_per_class: Vec<(CoverClass, usize)>,
    pub delta0: f64,
    pub region: CoverRegion,
}

impl CoverFamilies {
    pub fn families(&self) -> Vec<Vec<OscillatoryDomain>> {
        let mut out = vec![Vec::new(); self.k_used];
        for (d, &k) in self.domains.iter().zip(&self.family) {
            out[k].push(*d);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }
}

/// Upper limit on emitted domains: `64 delta0^{-d}`.
pub fn guard(delta0: f64, d: u32) -> usize {
    (64.0 * delta0.powi(-(d as i32))).ceil() as usize
}

fn new_index(dom: &HolderSubgraphDomain, delta0: f64) -> BucketIndex {
    let [x0, x1, y0, y1] = dom.bbox();
    let pad = delta0;
    BucketIndex::new(
        [x0 - pad, x1 + pad, y0 - pad, y1 + pad],
        delta0 / 16.0,
        delta0 / 2.0,
    )
}

pub fn greedy_cover(
    dom: &HolderSubgraphDomain,
    v: &PotentialField,
    delta0: f64,
    es: &ExponentSet,
    cfg: &CoverConfig,
) -> Result<CoverFamilies> {
    let probe = probe_grid(dom, delta0, es, cfg.probe_refine)?;
    greedy_cover_points(dom, v, delta0, es, cfg, &probe)
}

/// Greedy cover of the given probe points. Within each class the point with
/// the largest `delta` (ties: smallest `(x', x_d)`) among the uncovered ones
/// is taken next; its domain joins the first family of its class that it
/// does not meet.
pub fn greedy_cover_points(
    dom: &HolderSubgraphDomain,
    v: &PotentialField,
    delta0: f64,
    es: &ExponentSet,
    cfg: &CoverConfig,
    probe: &[Point],
) -> Result<CoverFamilies> {
    check_inputs(dom, v, delta0, es, cfg)?;
    if let Some(p) = probe.iter().find(|p| !dom.contains(**p)) {
        return Err(Error::ChartMiss { x: p[0], y: p[1] });
    }
    let sel = Selector { dom, v, es, cfg };
    let cands = probe
        .iter()
        .map(|&x| candidate(&sel, x, delta0))
        .collect::<Result<Vec<_>>>()?;
    let limit = guard(delta0, es.d);
    let mut idx = new_index(dom, delta0);
    let mut domains: Vec<OscillatoryDomain> = Vec::new();
    let mut rects: Vec<Rect> = Vec::new();
    let mut family: Vec<usize> = Vec::new();
    let mut near = Vec::new();
    let mut used = Vec::new();
    let mut base = 0;
    let mut k_per_class = Vec::new();
    for class in CLASS_ORDER {
        let mut local_k = 0;
        let mut order: Vec<usize> = (0..cands.len())
            .filter(|&i| cands[i].class() == class)
            .collect();
        order.sort_by(|&i, &j| {
            let (a, b) = (&cands[i], &cands[j]);
            b.delta
                .total_cmp(&a.delta)
                .then(a.center[0].total_cmp(&b.center[0]))
                .then(a.center[1].total_cmp(&b.center[1]))
        });
        for i in order {
            let c = &cands[i];
            let covered = idx.at_point(c.center).iter().any(|&k| {
                domains[k as usize].class() == class && rects[k as usize].contains(c.center)
            });
            if covered {
                continue;
            }
            if domains.len() >= limit {
                return Err(Error::NonTermination(limit));
            }
            let r = c.rect();
            idx.near_rect(&r, &mut near);
            used.clear();
            for &k in &near {
                let o = &rects[k as usize];
                if domains[k as usize].class() == class
                    && overlap(&r, o)
                    && rect_meets_domain(dom, &r.intersect(o))
                {
                    used.push(family[k as usize] - base);
                }
            }
            used.sort_unstable();
            used.dedup();
            let k = used
                .iter()
                .enumerate()
                .find(|(i, f)| *i != **f)
                .map_or(used.len(), |(i, _)| i);
            let id = domains.len() as u32;
            idx.insert(id, &r);
            domains.push(*c);
            rects.push(r);
            family.push(base + k);
            local_k = local_k.max(k + 1);
        }
        if local_k > 0 {
            k_per_class.push((class, local_k));
        }
        base += local_k;
    }
    Ok(CoverFamilies {
        domains,
        family,
        k_used: base,
        k_per_class,
        delta0,
        region: CoverRegion::Full,
    })
}

// ---------------------------------------------------------------------------
// verification and diagnostics

/// Counts by case tag.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JSizes {
    pub j1: usize,
    pub j2: usize,
    pub j3: usize,
    pub interior: usize,
}

impl JSizes {
    pub fn total(&self) -> usize {
        self.j1 + self.j2 + self.j3 + self.interior
    }
}

/// Counts by domain kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub cuboid_a_eq_delta: usize,
    pub cuboid_a_eq_c0h: usize,
    pub graph_capped: usize,
    pub interior_cube: usize,
    pub clipped_cube: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub pairwise_disjoint: bool,
    /// First intersecting pair within a family.
    pub overlap_witness: Option<(usize, usize)>,
    pub coverage_fraction: f64,
    pub uncovered_witness: Option<Point>,
    pub probe_points: usize,
    pub k_used: usize,
    pub j_sizes: JSizes,
    pub kinds: KindCounts,
    pub total: usize,
}

/// Exact disjointness within each family and coverage of `probe`.
pub fn verify_cover(
    cf: &CoverFamilies,
    dom: &HolderSubgraphDomain,
    probe: &[Point],
) -> CoverReport {
    let mut idx = new_index(dom, cf.delta0);
    let rects: Vec<Rect> = cf.domains.iter().map(|d| d.rect()).collect();
    for (i, r) in rects.iter().enumerate() {
        idx.insert(i as u32, r);
    }
    let mut witness = None;
    let mut near = Vec::new();
    'outer: for (i, r) in rects.iter().enumerate() {
        idx.near_rect(r, &mut near);
        for &j in &near {
            let j = j as usize;
            if j > i
                && cf.family[i] == cf.family[j]
                && overlap(r, &rects[j])
                && rect_meets_domain(dom, &r.intersect(&rects[j]))
            {
                witness = Some((i, j));
                break 'outer;
            }
        }
    }
    let mut covered = 0;
    let mut uncovered = None;
    for p in probe {
        if idx
            .at_point(*p)
            .iter()
            .any(|&k| rects[k as usize].contains(*p))
        {
            covered += 1;
        } else if uncovered.is_none() {
            uncovered = Some(*p);
        }
    }
    let mut j = JSizes::default();
    let mut kinds = KindCounts::default();
    for d in &cf.domains {
        match d.case_tag {
            CaseTag::Case1 => j.j1 += 1,
            CaseTag::Case2 => j.j2 += 1,
            CaseTag::Case3 => j.j3 += 1,
            CaseTag::Interior => j.interior += 1,
        }
        match d.kind {
            DomainKind::CuboidAEqDelta => kinds.cuboid_a_eq_delta += 1,
            DomainKind::CuboidAEqC0h => kinds.cuboid_a_eq_c0h += 1,
            DomainKind::GraphCapped => kinds.graph_capped += 1,
            DomainKind::InteriorCube => kinds.interior_cube += 1,
            DomainKind::ClippedCube => kinds.clipped_cube += 1,
        }
    }
    CoverReport {
        pairwise_disjoint: witness.is_none(),
        overlap_witness: witness,
        coverage_fraction: if probe.is_empty() {
            1.0
        } else {
            covered as f64 / probe.len() as f64
        },
        uncovered_witness: uncovered,
        probe_points: probe.len(),
        k_used: cf.k_used,
        j_sizes: j,
        kinds,
        total: cf.len(),
    }
}

/// `|J| delta0^d`.
pub fn count_vs_bound(cf: &CoverFamilies, d: u32) -> f64 {
    cf.len() as f64 * cf.delta0.powi(d as i32)
}

/// `(1/(2K)) sum_D (1/|D|) int_D |4 K V|`.
pub fn averaged_potential_lower_bound(
    cf: &CoverFamilies,
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    res: &QuadRes,
) -> Result<f64> {
    v.validate()?;
    if v.is_zero() || cf.is_empty() {
        return Ok(0.0);
    }
    let k = cf.k_used as f64;
    let mut s = 0.0;
    for d in &cf.domains {
        let r = d.rect();
        let area = area_in_domain(dom, &r);
        if area <= 0.0 {
            continue;
        }
        let l1 = lp_norm_on(v, dom, &Region::rect(r), 1.0, res)?;
        s += 4.0 * k * l1 / area;
    }
    Ok(s / (2.0 * k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryItem {
    pub item: String,
    pub applies: bool,
    pub ok: bool,
    pub value: f64,
    pub bound: f64,
    pub witness: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub items: Vec<GeometryItem>,
    /// `(max_D h_w / max(h, c1 delta))^{-beta}`.
    pub seminorm_constant: f64,
    pub ok: bool,
}

impl GeometryReport {
    pub fn violations(&self) -> Vec<&GeometryItem> {
        self.items.iter().filter(|i| i.applies && !i.ok).collect()
    }
}

/// Breakpoint-exact checks of the shape properties of `od`:
/// (i) cuboid kinds lie in the domain, (ii) `f >= x_d - delta/4` over the
/// base, (iii) `h_w in [h/2, 2h]` for `a = c0 h^{1/gamma}`, (iv) `|h_w - h| <= delta`
/// for graph-capped domains, (v) the seminorm comparison constant.
pub fn local_geometry_checks(
    od: &OscillatoryDomain,
    dom: &HolderSubgraphDomain,
    es: &ExponentSet,
) -> GeometryReport {
    let r = od.rect();
    let osc = matches!(
        od.kind,
        DomainKind::CuboidAEqDelta | DomainKind::CuboidAEqC0h | DomainKind::GraphCapped
    );
    let h = od.h_center;
    let (xmin, fmin) = extremum(dom, r.x0, r.x1, false);
    let (xmax, fmax) = extremum(dom, r.x0, r.x1, true);
    let mut items = Vec::new();

    let w = if od.is_cuboid() {
        rect_outside_witness(dom, &r)
    } else {
        None
    };
    items.push(GeometryItem {
        item: "i".into(),
        applies: od.is_cuboid(),
        ok: w.is_none(),
        value: fmin - r.y1,
        bound: 0.0,
        witness: w,
    });

    let floor = od.center[1] - 0.25 * od.delta;
    items.push(GeometryItem {
        item: "ii".into(),
        applies: osc,
        ok: !osc || fmin >= floor,
        value: fmin,
        bound: floor,
        witness: (osc && fmin < floor).then_some([xmin, fmin]),
    });

    // range of h_w = f(w') - w_d over D
    let h_lo = (fmin - r.y1).max(0.0);
    let h_hi = fmax - r.y0;
    let a1 = od.kind == DomainKind::CuboidAEqC0h;
    let (lo_ok, hi_ok) = (h_lo >= 0.5 * h, h_hi <= 2.0 * h);
    items.push(GeometryItem {
        item: "iii".into(),
        applies: a1,
        ok: !a1 || (lo_ok && hi_ok),
        value: if lo_ok { h_hi / h } else { h_lo / h },
        bound: if lo_ok { 2.0 } else { 0.5 },
        witness: if !a1 || (lo_ok && hi_ok) {
            None
        } else if !lo_ok {
            Some([xmin, r.y1])
        } else {
            Some([xmax, r.y0])
        },
    });

    let a2 = od.kind == DomainKind::GraphCapped;
    let (up, down) = (h_hi - h, h - h_lo);
    let dev = up.max(down);
    items.push(GeometryItem {
        item: "iv".into(),
        applies: a2,
        ok: !a2 || dev <= od.delta,
        value: dev,
        bound: od.delta,
        witness: (a2 && dev > od.delta).then_some({
            if up >= down {
                [xmax, r.y0]
            } else {
                [xmin, r.y1]
            }
        }),
    });

    let constant = if osc {
        (h_hi / h.max(es.c1 * od.delta)).powf(-es.beta)
    } else {
        f64::NAN
    };
    let applies = a1 || a2;
    let bound = 2f64.powf(-es.beta);
    items.push(GeometryItem {
        item: "v".into(),
        applies,
        ok: !applies || constant >= bound,
        value: constant,
        bound,
        witness: (applies && constant < bound).then_some([xmax, r.y0]),
    });
    let ok = items.iter().all(|i| !i.applies || i.ok);
    GeometryReport {
        items,
        seminorm_constant: constant,
        ok,
    }
}

/// A posteriori check of the condition behind a case tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseCheck {
    pub case_tag: CaseTag,
    /// Orlicz norm (case 2) or `int_D |V|^{ptilde}` (case 3).
    pub lhs: f64,
    /// `theta` (case 2) or `kappa max(h/(c1 delta), 1)^{(d-1)/gamma}` (case 3).
    pub rhs: f64,
    /// `lhs >= rhs/2` for cases 2 and 3; always true otherwise.
    pub holds: bool,
}

pub fn case_condition_check(
    od: &OscillatoryDomain,
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    es: &ExponentSet,
    cfg: &CoverConfig,
) -> Result<CaseCheck> {
    let sel = Selector { dom, v, es, cfg };
    let r = od.rect();
    let (lhs, rhs) = match od.case_tag {
        CaseTag::Case2 => (sel.orlicz(&r)?, cfg.theta),
        CaseTag::Case3 => (sel.n3(&r)?, sel.rhs3(od.h_center, od.delta)),
        _ => (f64::NAN, f64::NAN),
    };
    let holds = match od.case_tag {
        CaseTag::Case2 | CaseTag::Case3 => lhs >= 0.5 * rhs,
        _ => true,
    };
    Ok(CaseCheck {
        case_tag: od.case_tag,
        lhs,
        rhs,
        holds,
    })
}

#[cfg(test)]
mod tests;
