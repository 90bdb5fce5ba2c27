//! Gauss rules and the column-wise graded point sets used for integrals over
//! subgraph domains.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::domain::{HolderSubgraphDomain, BASE_DEPTH, BASE_HALF_WIDTH};

/// Nodes and weights on `[0,1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

/// Golub-Welsch for the Jacobi weight `x^alpha` on `[0,1]`.
fn golub_welsch_jacobi(n: usize, alpha: f64) -> Rule {
    assert!(n >= 1 && alpha > -1.0);
    let (a, b) = (0.0f64, alpha);
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for (k, d) in diag.iter_mut().enumerate() {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        *d = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
    }
    for (k, o) in off.iter_mut().enumerate() {
        let n1 = (k + 1) as f64;
        let s = 2.0 * n1 + a + b;
        let beta = if k == 0 {
            // (n + a + b) cancels against (2n + a + b - 1) at n = 1
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))
        } else {
            4.0 * n1 * (n1 + a) * (n1 + b) * (n1 + a + b) / (s * s * (s + 1.0) * (s - 1.0))
        };
        *o = beta.sqrt();
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = off[i];
            m[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(m);
    let total = 1.0 / (alpha + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let t = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (0.5 * (1.0 + t), total * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Rule {
        x: pairs.iter().map(|p| p.0).collect(),
        w: pairs.iter().map(|p| p.1).collect(),
    }
}

fn cache() -> &'static Mutex<HashMap<(usize, u64), &'static Rule>> {
    static C: OnceLock<Mutex<HashMap<(usize, u64), &'static Rule>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Jacobi rule for `int_0^1 x^alpha g(x) dx`, exact for polynomial `g`
/// of degree `< 2n`. Rules are cached for the life of the process.
pub fn gauss_jacobi(n: usize, alpha: f64) -> &'static Rule {
    let key = (n, alpha.to_bits());
    let mut c = cache().lock().unwrap();
    c.entry(key)
        .or_insert_with(|| Box::leak(Box::new(golub_welsch_jacobi(n, alpha))))
}

/// Gauss-Legendre on `[0,1]`.
pub fn gauss_legendre(n: usize) -> &'static Rule {
    gauss_jacobi(n, 0.0)
}

/// Symmetric 7-point rule on the reference triangle, exact to degree 5.
/// Barycentric coordinates and weights summing to 1.
pub const TRI7: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    (
        [
            0.059_715_871_789_770,
            0.470_142_064_105_115,
            0.470_142_064_105_115,
        ],
        0.132_394_152_788_506,
    ),
    (
        [
            0.470_142_064_105_115,
            0.059_715_871_789_770,
            0.470_142_064_105_115,
        ],
        0.132_394_152_788_506,
    ),
    (
        [
            0.470_142_064_105_115,
            0.470_142_064_105_115,
            0.059_715_871_789_770,
        ],
        0.132_394_152_788_506,
    ),
    (
        [
            0.797_426_985_353_087,
            0.101_286_507_323_456,
            0.101_286_507_323_456,
        ],
        0.125_939_180_544_827,
    ),
    (
        [
            0.101_286_507_323_456,
            0.797_426_985_353_087,
            0.101_286_507_323_456,
        ],
        0.125_939_180_544_827,
    ),
    (
        [
            0.101_286_507_323_456,
            0.101_286_507_323_456,
            0.797_426_985_353_087,
        ],
        0.125_939_180_544_827,
    ),
];

/// Collapsed (Duffy) tensor rule on the reference triangle with `n^2`
/// points, exact to degree `2n - 1`. Returns barycentric points and weights
/// summing to 1.
pub fn triangle_rule(n: usize) -> Vec<([f64; 3], f64)> {
    let gj = gauss_jacobi(n, 1.0);
    let gl = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for (u, wu) in gj.x.iter().zip(&gj.w) {
        for (v, wv) in gl.x.iter().zip(&gl.w) {
            // x = A + u (B - A) + u v (C - B)
            let l1 = u * (1.0 - v);
            let l2 = u * v;
            out.push(([1.0 - u, l1, l2], 2.0 * wu * wv));
        }
    }
    out
}

/// Resolution knobs for column quadrature.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadRes {
    /// Panels per unit length (both in `x'` and in the smooth part of `h`).
    pub panels: usize,
    /// Gauss order per panel and per graded cell.
    pub order: usize,
    /// Number of geometric (ratio 2) cells toward `h = 0`.
    pub levels: usize,
    /// Gauss-Jacobi order of the innermost cell.
    pub tail_order: usize,
}

impl Default for QuadRes {
    fn default() -> Self {
        Self {
            panels: 16,
            order: 4,
            levels: 40,
            tail_order: 6,
        }
    }
}

impl QuadRes {
    pub fn with_panels(panels: usize) -> Self {
        Self {
            panels,
            ..Self::default()
        }
    }

    pub fn doubled(&self) -> Self {
        Self {
            panels: 2 * self.panels,
            levels: self.levels + 10,
            ..*self
        }
    }
}

/// One quadrature node. `h` is `NaN` in the base box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QPoint {
    pub x: f64,
    pub y: f64,
    pub h: f64,
    pub w: f64,
}

/// Axis-aligned open rectangle `(x0,x1) x (y0,y1)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn centered(cx: f64, cy: f64, half_w: f64, half_h: f64) -> Self {
        Self::new(cx - half_w, cx + half_w, cy - half_h, cy + half_h)
    }

    pub fn everything() -> Self {
        Self::new(
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
        )
    }

    pub fn intersect(&self, o: &Rect) -> Rect {
        Rect::new(
            self.x0.max(o.x0),
            self.x1.min(o.x1),
            self.y0.max(o.y0),
            self.y1.min(o.y1),
        )
    }

    pub fn is_empty(&self) -> bool {
        !(self.x0 < self.x1 && self.y0 < self.y1)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }

    pub fn area(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (self.x1 - self.x0) * (self.y1 - self.y0)
        }
    }
}

/// Which part of the domain to integrate over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub rect: Rect,
    /// Restrict to the subgraph chart `x' in (0,1), x_d >= 0`.
    pub chart_only: bool,
    /// Keep only `h >= eta` (chart points).
    pub eta: f64,
}

impl Region {
    pub fn whole() -> Self {
        Self {
            rect: Rect::everything(),
            chart_only: false,
            eta: 0.0,
        }
    }

    pub fn chart() -> Self {
        Self {
            rect: Rect::everything(),
            chart_only: true,
            eta: 0.0,
        }
    }

    pub fn rect(r: Rect) -> Self {
        Self {
            rect: r,
            chart_only: false,
            eta: 0.0,
        }
    }
}

fn push_interval(a: f64, b: f64, panels: usize, rule: &Rule, out: &mut Vec<(f64, f64)>) {
    let n = panels.max(1);
    let step = (b - a) / n as f64;
    for k in 0..n {
        let lo = a + k as f64 * step;
        for (x, w) in rule.x.iter().zip(&rule.w) {
            out.push((lo + x * step, w * step));
        }
    }
}

/// Nodes in `h` on `[h_lo, h_hi]`: uniform panels down to `1/panels`, then
/// ratio-2 cells toward 0, then a Gauss-Jacobi cell with weight `h^tail`
/// when `h_lo = 0`.
pub fn graded_nodes(h_lo: f64, h_hi: f64, res: &QuadRes, tail: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if !(h_hi > h_lo) {
        return out;
    }
    let rule = gauss_legendre(res.order);
    let unit = 1.0 / res.panels as f64;
    // smooth part
    let mut top = h_hi;
    if h_hi > unit {
        let g = unit.max(h_lo);
        let n = ((h_hi - g) / unit).ceil() as usize;
        push_interval(g, h_hi, n, rule, &mut out);
        top = g;
    }
    if top <= h_lo {
        return out;
    }
    let mut hi = top;
    for _ in 0..res.levels {
        let lo = (0.5 * hi).max(h_lo);
        push_interval(lo, hi, 1, rule, &mut out);
        hi = lo;
        if hi <= h_lo {
            return out;
        }
    }
    if h_lo > 0.0 {
        // keep grading until h_lo is reached
        while hi > h_lo {
            let lo = (0.5 * hi).max(h_lo);
            push_interval(lo, hi, 1, rule, &mut out);
            hi = lo;
        }
        return out;
    }
    let tail = if tail > -1.0 { tail } else { 0.0 };
    let gj = gauss_jacobi(res.tail_order, tail);
    for (t, w) in gj.x.iter().zip(&gj.w) {
        out.push((hi * t, hi * w * t.powf(-tail)));
    }
    out
}

/// Quadrature points for `region` intersected with the domain.
///
/// Chart columns follow the breakpoints of `f`; in each column the `x'`
/// direction uses Gauss panels and the vertical direction is integrated in
/// `h = f(x') - x_d` with [`graded_nodes`]. `tail` is the expected power of
/// the integrand at `h = 0`.
pub fn region_points(
    dom: &HolderSubgraphDomain,
    region: &Region,
    res: &QuadRes,
    tail: f64,
) -> Vec<QPoint> {
    let mut pts = Vec::new();
    let r = region.rect;
    let gl = gauss_legendre(res.order);
    // subgraph part
    let (xa, xb) = (r.x0.max(0.0), r.x1.min(1.0));
    let ya = r.y0.max(0.0);
    if xa < xb && r.y1 > 0.0 {
        let pr = &dom.profile;
        let i0 = pr.piece(xa);
        let mut xs = Vec::new();
        let mut i = i0;
        while i + 1 < pr.len() && pr.xs[i] < xb {
            let (lo, hi) = (pr.xs[i].max(xa), pr.xs[i + 1].min(xb));
            if hi > lo {
                // split where f crosses the rect edges, the column height has a kink there
                let (f0, f1) = (pr.eval(lo), pr.eval(hi));
                let eta = region.eta.max(0.0);
                let levels = [ya, r.y1, ya + eta, r.y1 + eta];
                let touches = |fv: f64| levels.iter().any(|y| (fv - y).abs() <= 1e-12);
                let mut cuts = vec![(lo, touches(f0))];
                for y in levels {
                    if (f0 - y) * (f1 - y) < 0.0 {
                        let c = lo + (hi - lo) * (y - f0) / (f1 - f0);
                        cuts.push((c, true));
                    }
                }
                cuts.push((hi, touches(f1)));
                cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
                for c in cuts.windows(2) {
                    let ((c0, k0), (c1, k1)) = (c[0], c[1]);
                    if c1 <= c0 {
                        continue;
                    }
                    // grade toward a crossing, the integrand has a power singularity there
                    let m = 0.5 * (c0 + c1);
                    match (k0, k1) {
                        (false, false) => {
                            let n = ((c1 - c0) * res.panels as f64).ceil() as usize;
                            push_interval(c0, c1, n, gl, &mut xs);
                        }
                        (true, false) => xs.extend(
                            graded_nodes(0.0, c1 - c0, res, 0.0)
                                .iter()
                                .map(|(t, w)| (c0 + t, *w)),
                        ),
                        (false, true) => xs.extend(
                            graded_nodes(0.0, c1 - c0, res, 0.0)
                                .iter()
                                .map(|(t, w)| (c1 - t, *w)),
                        ),
                        (true, true) => {
                            xs.extend(
                                graded_nodes(0.0, m - c0, res, 0.0)
                                    .iter()
                                    .map(|(t, w)| (c0 + t, *w)),
                            );
                            xs.extend(
                                graded_nodes(0.0, c1 - m, res, 0.0)
                                    .iter()
                                    .map(|(t, w)| (c1 - t, *w)),
                            );
                        }
                    }
                }
            }
            i += 1;
        }
        for (x, wx) in xs {
            let f = dom.f(x);
            let h_hi = f - ya;
            let h_lo = (f - r.y1).max(region.eta).max(0.0);
            if h_hi <= h_lo {
                continue;
            }
            for (h, wh) in graded_nodes(h_lo, h_hi, res, tail) {
                pts.push(QPoint {
                    x,
                    y: f - h,
                    h,
                    w: wx * wh,
                });
            }
        }
    }
    if dom.base_box && !region.chart_only {
        let b = r.intersect(&Rect::new(
            -BASE_HALF_WIDTH,
            BASE_HALF_WIDTH,
            -BASE_DEPTH,
            0.0,
        ));
        if !b.is_empty() {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let nx = ((b.x1 - b.x0) * res.panels as f64).ceil() as usize;
            let ny = ((b.y1 - b.y0) * res.panels as f64).ceil() as usize;
            push_interval(b.x0, b.x1, nx, gl, &mut xs);
            push_interval(b.y0, b.y1, ny, gl, &mut ys);
            for &(x, wx) in &xs {
                for &(y, wy) in &ys {
                    pts.push(QPoint {
                        x,
                        y,
                        h: f64::NAN,
                        w: wx * wy,
                    });
                }
            }
        }
    }
    pts
}
