//! Lᵖ norms, the boundary-weighted seminorm, the Luxemburg norm and the
//! combined norm of nonpositive potentials.
//!
//! Integrals over the subgraph are taken column by column in the height
//! variable `h = f(x') - x_d`, graded toward the graph. Potentials that are a
//! pure power of `h` on the subgraph are integrated in closed form over each
//! linear piece of the profile, which keeps fine fractal profiles cheap.

use serde::{Deserialize, Serialize};

use crate::domain::{HolderSubgraphDomain, Point, BASE_DEPTH, BASE_HALF_WIDTH};
use crate::error::{invalid, Error, Result};
use crate::exponents::ExponentSet;
use crate::fit::ls_slope;
use crate::quadrature::{gauss_legendre, region_points, QPoint, QuadRes, Rect, Region};

/// Where a constant potential is switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// The subgraph `{0 < x' < 1, 0 <= x_d < f(x')}`.
    Chart,
    Whole,
}

/// A nonpositive potential on the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialField {
    Zero,
    Constant {
        value: f64,
        #[serde(default = "whole")]
        support: Support,
    },
    /// `-coef * h^exponent` on the subgraph, zero on the base box.
    HeightPower {
        coef: f64,
        exponent: f64,
    },
    /// Pyramid `-amplitude * (1 - |x - center|_inf / radius)_+`.
    Tent {
        amplitude: f64,
        center: Point,
        radius: f64,
    },
    /// Piecewise constant on a rectangular grid, zero outside it.
    Grid {
        origin: Point,
        cell: [f64; 2],
        nx: usize,
        ny: usize,
        /// Row-major, `ny` rows of `nx` values.
        values: Vec<f64>,
    },
}

fn whole() -> Support {
    Support::Whole
}

impl PotentialField {
    pub fn constant(value: f64) -> Self {
        Self::Constant {
            value,
            support: Support::Whole,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Zero => Ok(()),
            Self::Constant { value, .. } => {
                if !(*value <= 0.0) || !value.is_finite() {
                    return Err(invalid(
                        "potential",
                        format!("constant {value} must be <= 0"),
                    ));
                }
                Ok(())
            }
            Self::HeightPower { coef, exponent } => {
                if !(*coef >= 0.0) || !coef.is_finite() || !exponent.is_finite() {
                    return Err(invalid("potential", "need coef >= 0 and a finite exponent"));
                }
                Ok(())
            }
            Self::Tent {
                amplitude, radius, ..
            } => {
                if !(*amplitude >= 0.0) || !(*radius > 0.0) {
                    return Err(invalid("potential", "need amplitude >= 0 and radius > 0"));
                }
                Ok(())
            }
            Self::Grid {
                cell,
                nx,
                ny,
                values,
                ..
            } => {
                if values.len() != nx * ny {
                    return Err(invalid("potential", "grid size does not match nx*ny"));
                }
                if !(cell[0] > 0.0 && cell[1] > 0.0) {
                    return Err(invalid("potential", "grid cells must be positive"));
                }
                if values.iter().any(|v| !(*v <= 0.0) || !v.is_finite()) {
                    return Err(invalid("potential", "grid values must be finite and <= 0"));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Constant { value, .. } => *value == 0.0,
            Self::HeightPower { coef, .. } => *coef == 0.0,
            Self::Tent { amplitude, .. } => *amplitude == 0.0,
            Self::Grid { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// `(c, alpha)` when `V = -c h^alpha` on the subgraph.
    pub fn height_power(&self) -> Option<(f64, f64)> {
        match self {
            Self::Zero => Some((0.0, 0.0)),
            Self::Constant { value, .. } => Some((-value, 0.0)),
            Self::HeightPower { coef, exponent } => Some((*coef, *exponent)),
            _ => None,
        }
    }

    /// Exponent of the blow-up at the graph, 0 for bounded potentials.
    pub fn singular_exponent(&self) -> f64 {
        match self {
            Self::HeightPower { coef, exponent } if *coef > 0.0 => exponent.min(0.0),
            _ => 0.0,
        }
    }

    /// Value on the base box part (`x_d < 0`) and off the subgraph.
    fn off_chart(&self, p: Point) -> f64 {
        match self {
            Self::Constant {
                value,
                support: Support::Whole,
            } => *value,
            Self::Tent { .. } | Self::Grid { .. } => self.spatial(p),
            _ => 0.0,
        }
    }

    fn spatial(&self, p: Point) -> f64 {
        match self {
            Self::Tent {
                amplitude,
                center,
                radius,
            } => {
                let r = (p[0] - center[0]).abs().max((p[1] - center[1]).abs());
                -amplitude * (1.0 - r / radius).max(0.0)
            }
            Self::Grid {
                origin,
                cell,
                nx,
                ny,
                values,
            } => {
                let i = ((p[0] - origin[0]) / cell[0]).floor();
                let j = ((p[1] - origin[1]) / cell[1]).floor();
                if i < 0.0 || j < 0.0 || i >= *nx as f64 || j >= *ny as f64 {
                    0.0
                } else {
                    values[j as usize * nx + i as usize]
                }
            }
            _ => 0.0,
        }
    }

    /// `V(p)` for `p` in the domain.
    pub fn value(&self, dom: &HolderSubgraphDomain, p: Point) -> f64 {
        if dom.in_subgraph(p) {
            self.value_with_height(p, dom.height(p))
        } else {
            self.off_chart(p)
        }
    }

    /// `V(p)` when the height of a subgraph point is already known; `h` is
    /// `NaN` off the subgraph.
    pub fn value_with_height(&self, p: Point, h: f64) -> f64 {
        if h.is_nan() {
            return self.off_chart(p);
        }
        match self {
            Self::Zero => 0.0,
            Self::Constant { value, .. } => *value,
            Self::HeightPower { coef, exponent } => {
                if *coef == 0.0 {
                    0.0
                } else {
                    -coef * h.powf(*exponent)
                }
            }
            _ => self.spatial(p),
        }
    }

    fn at(&self, q: &QPoint) -> f64 {
        self.value_with_height([q.x, q.y], q.h)
    }
}

/// Young function of the Luxemburg norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Young {
    /// `(1+u) ln(1+u) - u`
    #[default]
    LLogL,
    /// `u^p`; the Luxemburg norm is then the Lᵖ norm.
    Power(f64),
}

impl Young {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Young::LLogL => {
                if u < 1e-4 {
                    // series, avoids cancellation
                    u * u * (0.5 - u / 6.0 + u * u / 12.0)
                } else {
                    (1.0 + u) * u.ln_1p() - u
                }
            }
            Young::Power(p) => u.powf(*p),
        }
    }
}

/// `int_{eta}^{H} h^q dh` (0 for `H <= eta`).
fn power_primitive(h: f64, eta: f64, q: f64) -> f64 {
    if h <= eta {
        return 0.0;
    }
    if (q + 1.0).abs() < 1e-14 {
        (h / eta).ln()
    } else {
        (h.powf(q + 1.0) - eta.powf(q + 1.0)) / (q + 1.0)
    }
}

/// `int_{eta}^{S} power_primitive(s) ds`.
fn power_second_primitive(s: f64, eta: f64, q: f64) -> f64 {
    if s <= eta {
        return 0.0;
    }
    if (q + 1.0).abs() < 1e-14 {
        s * (s / eta).ln() - (s - eta)
    } else if (q + 2.0).abs() < 1e-14 {
        ((s / eta).ln() - eta.powf(q + 1.0) * (s - eta)) / (q + 1.0)
    } else {
        ((s.powf(q + 2.0) - eta.powf(q + 2.0)) / (q + 2.0) - eta.powf(q + 1.0) * (s - eta))
            / (q + 1.0)
    }
}

/// `int_{x0}^{x1} power_primitive(f(x)) dx` for `f` linear from `f0` to `f1`.
fn piece_integral(dx: f64, f0: f64, f1: f64, eta: f64, q: f64) -> f64 {
    let (lo, hi) = (f0.min(f1), f0.max(f1));
    if hi <= eta {
        return 0.0;
    }
    if hi - lo <= 1e-3 * hi {
        // nearly flat: Gauss in x, away from cancellation
        let g = gauss_legendre(6);
        if lo >= eta {
            return dx
                * g.x
                    .iter()
                    .zip(&g.w)
                    .map(|(t, w)| w * power_primitive(f0 + t * (f1 - f0), eta, q))
                    .sum::<f64>();
        }
    }
    dx * (power_second_primitive(hi, eta, q) - power_second_primitive(lo, eta, q)) / (hi - lo)
}

/// `int h^q` over `{h >= eta}` in the part of the subgraph inside `r`,
/// exactly, piece by piece of the profile.
pub fn rect_height_integral(dom: &HolderSubgraphDomain, r: &Rect, eta: f64, q: f64) -> f64 {
    let pr = &dom.profile;
    let (xa, xb) = (r.x0.max(pr.xs[0]), r.x1.min(pr.xs[pr.len() - 1]));
    let y0 = r.y0.max(0.0);
    if !(xa < xb) || !(r.y1 > y0) {
        return 0.0;
    }
    let mut s = 0.0;
    let mut i = pr.piece(xa);
    while i + 1 < pr.len() && pr.xs[i] < xb {
        let (lo, hi) = (pr.xs[i].max(xa), pr.xs[i + 1].min(xb));
        if hi > lo {
            let (f0, f1) = (pr.eval(lo), pr.eval(hi));
            // heights between f - y1 and f - y0
            s += piece_integral(hi - lo, f0 - y0, f1 - y0, eta, q);
            if r.y1.is_finite() {
                s -= piece_integral(hi - lo, f0 - r.y1, f1 - r.y1, eta, q);
            }
        }
        i += 1;
    }
    s.max(0.0)
}

fn base_area(dom: &HolderSubgraphDomain, r: &Rect) -> f64 {
    if !dom.base_box {
        return 0.0;
    }
    r.intersect(&Rect::new(
        -BASE_HALF_WIDTH,
        BASE_HALF_WIDTH,
        -BASE_DEPTH,
        0.0,
    ))
    .area()
}

/// `int_{region} h^{-beta} |V|^p`, where the weight is only applied on the
/// subgraph. Closed-form potentials are checked analytically for
/// integrability at the graph; others by a refinement test.
pub fn power_integral(
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    region: &Region,
    p: f64,
    beta: f64,
    res: &QuadRes,
) -> Result<f64> {
    v.validate()?;
    if !(p > 0.0) {
        return Err(invalid("p", format!("need p > 0, got {p}")));
    }
    if v.is_zero() {
        return Ok(0.0);
    }
    if let Some((c, alpha)) = v.height_power() {
        let q = p * alpha - beta;
        let chart_nonzero = !matches!(v, PotentialField::Constant { .. }) || c > 0.0;
        if chart_nonzero && region.eta <= 0.0 && q <= -1.0 {
            return Err(Error::NonIntegrable { exponent: q });
        }
        let base = if region.chart_only {
            0.0
        } else {
            v.off_chart([-1.0, -1.0]).abs().powf(p) * base_area(dom, &region.rect)
        };
        let chart = c.powf(p) * rect_height_integral(dom, &region.rect, region.eta, q);
        return Ok(chart + base);
    }
    let eval = |res: &QuadRes| -> f64 {
        region_points(dom, region, res, -beta)
            .iter()
            .map(|pt| {
                let wgt = if pt.h.is_nan() { 1.0 } else { pt.h.powf(-beta) };
                pt.w * wgt * v.at(pt).abs().powf(p)
            })
            .sum()
    };
    let a = eval(res);
    if beta > 0.0 && region.eta <= 0.0 {
        let b = eval(&res.doubled());
        if (b - a).abs() > 1e-3 * b.abs().max(1e-300) {
            return Err(Error::NoStabilization(format!(
                "weighted integral {a:e} -> {b:e} under refinement"
            )));
        }
        return Ok(b);
    }
    Ok(a)
}

/// `(int_Omega |V|^p)^{1/p}`.
pub fn lp_norm(
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    p: f64,
    res: &QuadRes,
) -> Result<f64> {
    lp_norm_on(v, dom, &Region::whole(), p, res)
}

pub fn lp_norm_on(
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    region: &Region,
    p: f64,
    res: &QuadRes,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid("p", format!("need p >= 1, got {p}")));
    }
    Ok(power_integral(v, dom, region, p, 0.0, res)?.powf(1.0 / p))
}

/// `(int_{chart, h >= eta} h^{-beta} |V|^p)^{1/p}`.
pub fn weighted_seminorm(
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    p: f64,
    beta: f64,
    eta: f64,
    res: &QuadRes,
) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(invalid("beta", format!("need beta >= 0, got {beta}")));
    }
    if !(eta >= 0.0) {
        return Err(invalid("eta", format!("need eta >= 0, got {eta}")));
    }
    let region = Region {
        eta,
        ..Region::chart()
    };
    Ok(power_integral(v, dom, &region, p, beta, res)?.powf(1.0 / p))
}

/// Luxemburg norm `inf{t > 0 : int young(|V|/t) <= 1}` over the whole domain.
pub fn orlicz_norm(
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    young: Young,
    res: &QuadRes,
) -> Result<f64> {
    orlicz_norm_on(v, dom, &Region::whole(), young, res)
}

pub fn orlicz_norm_on(
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    region: &Region,
    young: Young,
    res: &QuadRes,
) -> Result<f64> {
    v.validate()?;
    if v.is_zero() {
        return Ok(0.0);
    }
    let alpha = v.singular_exponent();
    let growth = match young {
        Young::LLogL => 1.0,
        Young::Power(p) => p,
    };
    if alpha * growth <= -1.0 && region.eta <= 0.0 {
        return Err(Error::NonIntegrable {
            exponent: alpha * growth,
        });
    }
    let pts = region_points(dom, region, res, alpha);
    let vals: Vec<(f64, f64)> = pts
        .iter()
        .map(|q| (q.w, v.at(q).abs()))
        .filter(|(_, a)| *a > 0.0)
        .collect();
    if vals.is_empty() {
        return Ok(0.0);
    }
    luxemburg(&vals, young)
}

/// Root of `sum w young(a / t) = 1` for weighted samples `(w, a)`.
pub fn luxemburg(vals: &[(f64, f64)], young: Young) -> Result<f64> {
    let mass = |t: f64| -> f64 { vals.iter().map(|(w, a)| w * young.eval(a / t)).sum() };
    let l1: f64 = vals.iter().map(|(w, a)| w * a).sum();
    let mut lo = l1.max(1e-300);
    let mut hi = lo;
    let mut it = 0;
    while mass(hi) > 1.0 {
        hi *= 2.0;
        it += 1;
        if it > 2000 {
            return Err(Error::NotBracketed {
                lo,
                hi,
                f_lo: mass(lo) - 1.0,
                f_hi: mass(hi) - 1.0,
            });
        }
    }
    while mass(lo) <= 1.0 {
        lo *= 0.5;
        it += 1;
        if it > 2000 {
            return Err(Error::NotBracketed {
                lo,
                hi,
                f_lo: mass(lo) - 1.0,
                f_hi: mass(hi) - 1.0,
            });
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    Ok(hi)
}

/// `||V||_{ptilde,beta}`: Orlicz norm plus weighted seminorm for `d = 2`,
/// `L^{d/2}` norm plus weighted seminorm otherwise.
pub fn combined_norm(
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    es: &ExponentSet,
    res: &QuadRes,
) -> Result<f64> {
    let semi = weighted_seminorm(v, dom, es.ptilde, es.beta, 0.0, res)?;
    let main = if es.d == 2 {
        orlicz_norm(v, dom, Young::default(), res)?
    } else {
        lp_norm(v, dom, es.d as f64 / 2.0, res)?
    };
    Ok(main + semi)
}

/// Both sides of `||V||_{ptilde,beta} <= C ||V||_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormComparison {
    pub lhs: f64,
    pub rhs: f64,
    /// Explicit Hölder constant for this domain and exponent.
    pub constant: f64,
    /// `lhs <= constant * rhs`
    pub holds: bool,
}

/// Compares the combined norm with the Lᵖ norm for `p > ptilde/(1-beta)`.
///
/// The reported constant comes from Hölder's inequality: the seminorm is
/// bounded by `(int_chart h^{-beta r'})^{1/(r' ptilde)} ||V||_p` with
/// `r = p/ptilde`, and the Orlicz part by `|Omega|^{1/2-1/p}/sqrt 2 ||V||_p`
/// (`p >= 2`) since `young(u) <= u^2/2`.
pub fn norm_comparison(
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    p: f64,
    es: &ExponentSet,
    res: &QuadRes,
) -> Result<NormComparison> {
    if es.beta >= 1.0 {
        return Err(invalid("gamma", format!("beta = {} >= 1", es.beta)));
    }
    let threshold = es.ptilde / (1.0 - es.beta);
    if !(p > threshold) {
        return Err(invalid("p", format!("need p > {threshold}, got {p}")));
    }
    let lhs = combined_norm(v, dom, es, res)?;
    let rhs = lp_norm(v, dom, p, res)?;
    let rp = p / (p - es.ptilde);
    let weight = rect_height_integral(dom, &Rect::everything(), 0.0, -es.beta * rp);
    let c_semi = weight.powf(1.0 / (rp * es.ptilde));
    let c_orlicz = if es.d == 2 {
        if p >= 2.0 {
            dom.area().powf(0.5 - 1.0 / p) / 2f64.sqrt()
        } else {
            // sup_u young(u)/u^p, attained on a bounded range for 1 < p < 2
            let k = (0..4000)
                .map(|i| {
                    let u = 10f64.powf(-6.0 + 12.0 * i as f64 / 4000.0);
                    Young::LLogL.eval(u) / u.powf(p)
                })
                .fold(0.0, f64::max)
                * 1.01;
            k.powf(1.0 / p)
        }
    } else {
        dom.area().powf(2.0 / es.d as f64 - 1.0 / p)
    };
    let constant = c_semi + c_orlicz;
    Ok(NormComparison {
        lhs,
        rhs,
        constant,
        holds: lhs <= constant * rhs * (1.0 + 1e-9),
    })
}

/// Fit of the truncated seminorm integral against the cutoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceFit {
    pub etas: Vec<f64>,
    /// `int_{h >= eta} h^{-beta} |V|^p` per cutoff.
    pub integrals: Vec<f64>,
    /// Least-squares slope of `ln I(eta)` against `ln(1/eta)`.
    pub slope: f64,
    /// Slope of the log shell density `dI / d ln(1/eta)` against
    /// `ln(1/eta)`; equals `-(q+1)` for an integrand `h^q`.
    pub shell_slope: f64,
    /// `shell_slope > -0.05`: the mass per decade does not decay.
    pub divergent: bool,
}

pub fn divergence_slope(
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    p: f64,
    beta: f64,
    eta_grid: &[f64],
    res: &QuadRes,
) -> Result<DivergenceFit> {
    if eta_grid.windows(2).any(|w| !(w[1] < w[0])) || eta_grid.iter().any(|e| !(*e > 0.0)) {
        return Err(invalid(
            "eta_grid",
            "must be positive and strictly decreasing",
        ));
    }
    if eta_grid.len() < 2 || eta_grid[0] / eta_grid[eta_grid.len() - 1] < 100.0 {
        return Err(invalid("eta_grid", "must span at least two decades"));
    }
    let mut etas = Vec::new();
    let mut integrals = Vec::new();
    for &eta in eta_grid {
        let region = Region {
            eta,
            ..Region::chart()
        };
        match power_integral(v, dom, &region, p, beta, res) {
            Ok(i) if i.is_finite() && i > 0.0 => {
                etas.push(eta);
                integrals.push(i);
            }
            Ok(_) | Err(Error::NoStabilization(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if etas.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} of {} cutoffs gave a usable integral",
            etas.len(),
            eta_grid.len()
        )));
    }
    let lx: Vec<f64> = etas.iter().map(|e| (1.0 / e).ln()).collect();
    let ly: Vec<f64> = integrals.iter().map(|i| i.ln()).collect();
    let slope = ls_slope(&lx, &ly)?;
    let mut sx = Vec::new();
    let mut sy = Vec::new();
    for i in 1..etas.len() {
        let di = integrals[i] - integrals[i - 1];
        if di > 0.0 {
            let dl = lx[i] - lx[i - 1];
            sx.push(0.5 * (lx[i] + lx[i - 1]));
            sy.push((di / dl).ln());
        }
    }
    if sx.len() < 2 {
        return Err(Error::DegenerateFit(
            "fewer than two shells carry mass".into(),
        ));
    }
    let shell_slope = ls_slope(&sx, &sy)?;
    Ok(DivergenceFit {
        etas,
        integrals,
        slope,
        shell_slope,
        divergent: shell_slope > -0.05,
    })
}

/// Everything the `norms` command reports; divergent pieces are `None` and
/// named in `divergence_flags`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub lp: Option<f64>,
    pub seminorm: Option<f64>,
    pub orlicz: Option<f64>,
    pub combined: Option<f64>,
    pub divergence_flags: Vec<String>,
}

pub fn norm_report(
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    es: &ExponentSet,
    p: f64,
    beta: f64,
    eta: f64,
    res: &QuadRes,
) -> Result<NormReport> {
    let mut flags = Vec::new();
    let mut keep = |name: &str, r: Result<f64>| -> Result<Option<f64>> {
        match r {
            Ok(x) => Ok(Some(x)),
            Err(e @ (Error::NonIntegrable { .. } | Error::NoStabilization(_))) => {
                flags.push(format!("{name}: {e}"));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };
    let lp = keep("lp", lp_norm(v, dom, p, res))?;
    let seminorm = keep("seminorm", weighted_seminorm(v, dom, p, beta, eta, res))?;
    let orlicz = keep("orlicz", orlicz_norm(v, dom, Young::default(), res))?;
    let combined = keep("combined", combined_norm(v, dom, es, res))?;
    Ok(NormReport {
        lp,
        seminorm,
        orlicz,
        combined,
        divergence_flags: flags,
    })
}
