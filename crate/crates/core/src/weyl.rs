//! Semiclassical predictions and the finite element scans that are compared
//! with them: Weyl ratios, Dirichlet-Neumann bracketing on dyadic cubes, and
//! the CLR-type bound `N <= C delta0^{-d}`.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::covering::rect_inside_domain;
use crate::domain::HolderSubgraphDomain;
use crate::error::{invalid, Error, Result};
use crate::exponents::{compute_exponents, delta0, ExponentSet};
use crate::fit::theil_sen;
use crate::norms::{combined_norm, power_integral, PotentialField, Support};
use crate::quadrature::{QuadRes, Rect, Region};
use crate::spectral::{assemble, count_below, triangulate, Bc, Mesh, MeshOptions};

/// Mesh points required per shortest wavelength.
pub const POINTS_PER_WAVELENGTH: f64 = 8.0;

/// `|B_1(0)|` in `R^d`.
pub fn unit_ball_volume(d: u32) -> f64 {
    // Gamma(d/2 + 1) by the recursion from Gamma(1) or Gamma(1/2)
    let mut g = if d.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if d.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < d as f64 / 2.0 + 1.0 - 1e-9 {
        g *= x;
        x += 1.0;
    }
    PI.powf(d as f64 / 2.0) / g
}

/// `(2 pi)^{-d} |B_1| lambda^{d/2} int |V|^{d/2}`.
pub fn semiclassical_count(
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    lambda: f64,
    d: u32,
    res: &QuadRes,
) -> Result<f64> {
    if d < 2 {
        return Err(invalid("d", format!("need d >= 2, got {d}")));
    }
    if !(lambda >= 0.0) {
        return Err(invalid("lambda", format!("need lambda >= 0, got {lambda}")));
    }
    if lambda == 0.0 || v.is_zero() {
        return Ok(0.0);
    }
    let half = d as f64 / 2.0;
    let mass = power_integral(v, dom, &Region::whole(), half, 0.0, res)?;
    Ok((2.0 * PI).powi(-(d as i32)) * unit_ball_volume(d) * lambda.powf(half) * mass)
}

/// Exact `#{(j,k) >= 0 : pi^2 (j^2 + k^2) < lambda}`, the Neumann count of
/// `-Delta - lambda` on the unit square.
pub fn neumann_square_count(lambda: f64) -> u64 {
    lattice_count(lambda, 0)
}

/// Same with `j, k >= 1` (Dirichlet).
pub fn dirichlet_square_count(lambda: f64) -> u64 {
    lattice_count(lambda, 1)
}

fn lattice_count(lambda: f64, start: u64) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    let r2 = lambda / (PI * PI);
    let mut n = 0;
    let mut j = start;
    while ((j * j) as f64) < r2 {
        let rest = r2 - (j * j) as f64;
        let mut k = rest.sqrt().floor() as u64 + 1;
        while k > 0 && ((k * k) as f64) >= rest {
            k -= 1;
        }
        // k is the largest value with k^2 < rest
        if k >= start {
            n += k + 1 - start;
        }
        j += 1;
    }
    n
}

/// `sup |V|` over the domain, `inf` for a singular potential.
pub fn sup_abs(v: &PotentialField, dom: &HolderSubgraphDomain) -> f64 {
    match v {
        PotentialField::Zero => 0.0,
        PotentialField::Constant { value, .. } => value.abs(),
        PotentialField::HeightPower { coef, exponent } => {
            if *coef == 0.0 {
                0.0
            } else if *exponent < 0.0 {
                f64::INFINITY
            } else {
                let top = dom.profile.ys.iter().copied().fold(0.0, f64::max);
                coef * top.powf(*exponent)
            }
        }
        PotentialField::Tent { amplitude, .. } => amplitude.abs(),
        PotentialField::Grid { values, .. } => values.iter().fold(0.0, |a, v| a.max(v.abs())),
    }
}

/// Largest mesh size that puts [`POINTS_PER_WAVELENGTH`] points on the
/// wavelength `2 pi / sqrt(lambda sup|V|)`.
pub fn required_mesh_h(v: &PotentialField, dom: &HolderSubgraphDomain, lambda_max: f64) -> f64 {
    let k2 = lambda_max * sup_abs(v, dom);
    if k2 == 0.0 {
        f64::INFINITY
    } else {
        2.0 * PI / (POINTS_PER_WAVELENGTH * k2.sqrt())
    }
}

fn check_resolution(
    v: &PotentialField,
    dom: &HolderSubgraphDomain,
    lambda_max: f64,
    mesh_h: f64,
) -> Result<()> {
    let required = required_mesh_h(v, dom, lambda_max);
    if mesh_h > required {
        return Err(Error::Resolution { mesh_h, required });
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("lambda_grid", "empty"));
    }
    if grid.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(invalid("lambda_grid", "need finite lambda >= 0"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("lambda_grid", "must be strictly increasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylScanRow {
    pub lambda: f64,
    pub fem_count: usize,
    pub semiclassical: f64,
    /// `fem_count / lambda^{d/2}`
    pub ratio: f64,
    /// `delta0(lambda V)^{-d}`, `NaN` when the norm of `V` is infinite.
    pub clr_bound: f64,
    pub mesh_h: f64,
}

pub fn weyl_scan(
    dom: &HolderSubgraphDomain,
    v: &PotentialField,
    lambda_grid: &[f64],
    mesh_h: f64,
    bc: Bc,
    res: &QuadRes,
) -> Result<Vec<WeylScanRow>> {
    check_grid(lambda_grid)?;
    check_resolution(v, dom, lambda_grid[lambda_grid.len() - 1], mesh_h)?;
    let es = compute_exponents(2, dom.gamma, dom.c)?;
    let norm = combined_norm(v, dom, &es, res).ok();
    let mesh = triangulate(dom, &MeshOptions::new(mesh_h))?;
    let base = assemble(&mesh, v, 1.0, bc)?;
    let mut rows = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let op = base.with_lambda(lambda);
        let fem_count = count_below(&op, 0.0).count;
        let clr_bound = match norm {
            Some(n) => delta0(lambda * n, dom.h_omega, 2)?.powi(-2),
            None => f64::NAN,
        };
        rows.push(WeylScanRow {
            lambda,
            fem_count,
            semiclassical: semiclassical_count(v, dom, lambda, 2, res)?,
            ratio: if lambda > 0.0 {
                fem_count as f64 / lambda
            } else {
                f64::NAN
            },
            clr_bound,
            mesh_h,
        });
    }
    Ok(rows)
}

/// CSV with one line per row.
pub fn scan_csv(rows: &[WeylScanRow]) -> String {
    let mut s = String::from("lambda,fem_count,semiclassical,ratio,clr_bound,mesh_h\n");
    for r in rows {
        s.push_str(&format!(
            "{:e},{},{:e},{:e},{:e},{:e}\n",
            r.lambda, r.fem_count, r.semiclassical, r.ratio, r.clr_bound, r.mesh_h
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketingReport {
    pub m_level: u32,
    pub lambda: f64,
    pub sigma: f64,
    /// Cubes of side `2^{-m_level}` meeting `supp W`.
    pub cubes: usize,
    pub sum_dirichlet: usize,
    pub global: usize,
    pub sum_neumann: usize,
    /// `sum_dirichlet <= global <= sum_neumann`
    pub holds: bool,
    /// `global - sum_dirichlet`
    pub gap_lower: usize,
    /// `sum_neumann - global`
    pub gap_upper: usize,
    /// `sqrt(d) 2^{-m_level} < dist(supp W, boundary)`, the sufficient
    /// condition for the cubes to lie in the domain.
    pub distance_condition: bool,
}

/// Closed bounding box of `supp W`; `None` for the zero potential.
fn support_box(w: &PotentialField) -> Result<Option<Rect>> {
    match w {
        PotentialField::Zero => Ok(None),
        PotentialField::Tent {
            amplitude,
            center,
            radius,
        } => {
            Ok((*amplitude != 0.0).then(|| Rect::centered(center[0], center[1], *radius, *radius)))
        }
        PotentialField::Grid {
            origin,
            cell,
            nx,
            ny,
            values,
        } => {
            let mut r: Option<Rect> = None;
            for j in 0..*ny {
                for i in 0..*nx {
                    if values[j * nx + i] != 0.0 {
                        let x0 = origin[0] + i as f64 * cell[0];
                        let y0 = origin[1] + j as f64 * cell[1];
                        let c = Rect::new(x0, x0 + cell[0], y0, y0 + cell[1]);
                        r = Some(match r {
                            None => c,
                            Some(r) => Rect::new(
                                r.x0.min(c.x0),
                                r.x1.max(c.x1),
                                r.y0.min(c.y0),
                                r.y1.max(c.y1),
                            ),
                        });
                    }
                }
            }
            Ok(r)
        }
        PotentialField::Constant {
            value,
            support: Support::Chart | Support::Whole,
        } if *value == 0.0 => Ok(None),
        PotentialField::HeightPower { coef, .. } if *coef == 0.0 => Ok(None),
        _ => Err(invalid(
            "w",
            "need a compactly supported tent or grid potential",
        )),
    }
}

/// Distance from the rectangle to the complement of the domain, sampled on
/// the boundary polygon.
fn dist_to_complement(dom: &HolderSubgraphDomain, r: &Rect) -> f64 {
    let poly = dom.polygon();
    let mut best = f64::INFINITY;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        best = best.min(seg_rect_dist(a, b, r));
    }
    best
}

fn seg_rect_dist(a: [f64; 2], b: [f64; 2], r: &Rect) -> f64 {
    let n = 64;
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let dx = (r.x0 - p[0]).max(p[0] - r.x1).max(0.0);
            let dy = (r.y0 - p[1]).max(p[1] - r.y1).max(0.0);
            dx.hypot(dy)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Triangles of `mesh` inside the closed rectangle as a mesh of their own.
/// The boundary flags mark vertices on the rectangle's edges.
fn sub_mesh(mesh: &Mesh, tris: &[usize], r: &Rect) -> Mesh {
    let mut map = HashMap::new();
    let mut vertices = Vec::new();
    let mut heights = Vec::new();
    let mut triangles = Vec::with_capacity(tris.len());
    let mut in_chart = Vec::with_capacity(tris.len());
    for &t in tris {
        let mut local = [0; 3];
        for (i, &v) in mesh.triangles[t].iter().enumerate() {
            local[i] = *map.entry(v).or_insert_with(|| {
                vertices.push(mesh.vertices[v]);
                heights.push(mesh.heights[v]);
                vertices.len() - 1
            });
        }
        triangles.push(local);
        in_chart.push(mesh.in_chart[t]);
    }
    let tol = 1e-12 * (r.x1 - r.x0);
    let boundary = vertices
        .iter()
        .map(|p| {
            (p[0] - r.x0).abs() < tol
                || (p[0] - r.x1).abs() < tol
                || (p[1] - r.y0).abs() < tol
                || (p[1] - r.y1).abs() < tol
        })
        .collect();
    Mesh {
        vertices,
        triangles,
        boundary,
        heights,
        in_chart,
        columns: Vec::new(),
        h_mesh: mesh.h_mesh,
    }
}

/// Dirichlet and Neumann counts on the dyadic cubes meeting `supp W`
/// against the global Neumann count, all on one aligned mesh.
pub fn bracketing_check(
    dom: &HolderSubgraphDomain,
    w: &PotentialField,
    m_level: u32,
    lambda: f64,
    mesh_h: f64,
    sigma: f64,
) -> Result<BracketingReport> {
    if !(lambda >= 0.0) {
        return Err(invalid("lambda", format!("need lambda >= 0, got {lambda}")));
    }
    if m_level > 20 {
        return Err(invalid("m_level", "too fine"));
    }
    let side = 2f64.powi(-(m_level as i32));
    let per = side / mesh_h;
    if (per - per.round()).abs() > 1e-9 || per.round() < 1.0 {
        return Err(invalid(
            "mesh_h",
            format!("{mesh_h} does not divide the cube side {side}"),
        ));
    }
    let supp = support_box(w)?;
    let mut cubes: Vec<(i64, i64)> = Vec::new();
    let mut distance_condition = true;
    if let Some(s) = supp {
        distance_condition = 2f64.sqrt() * side < dist_to_complement(dom, &s);
        let (i0, i1) = ((s.x0 / side).floor() as i64, (s.x1 / side).ceil() as i64);
        let (j0, j1) = ((s.y0 / side).floor() as i64, (s.y1 / side).ceil() as i64);
        for j in j0..j1 {
            for i in i0..i1 {
                let q = Rect::new(
                    i as f64 * side,
                    (i + 1) as f64 * side,
                    j as f64 * side,
                    (j + 1) as f64 * side,
                );
                // open cube against the closed support
                if q.x0 < s.x1 && q.x1 > s.x0 && q.y0 < s.y1 && q.y1 > s.y0 {
                    if !rect_inside_domain(dom, &q) {
                        return Err(Error::SupportTooClose { m_level });
                    }
                    cubes.push((i, j));
                }
            }
        }
    }

    let mesh = triangulate(dom, &MeshOptions::new(mesh_h))?;
    let index: HashMap<(i64, i64), usize> =
        cubes.iter().enumerate().map(|(n, c)| (*c, n)).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); cubes.len()];
    let tol = 1e-9 * side;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p: Vec<[f64; 2]> = tri.iter().map(|&v| mesh.vertices[v]).collect();
        let c = [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ];
        let key = ((c[0] / side).floor() as i64, (c[1] / side).floor() as i64);
        let Some(&n) = index.get(&key) else { continue };
        let q = Rect::new(
            key.0 as f64 * side,
            (key.0 + 1) as f64 * side,
            key.1 as f64 * side,
            (key.1 + 1) as f64 * side,
        );
        if p.iter().any(|v| {
            v[0] < q.x0 - tol || v[0] > q.x1 + tol || v[1] < q.y0 - tol || v[1] > q.y1 + tol
        }) {
            return Err(invalid("mesh_h", "mesh is not aligned to the cube grid"));
        }
        members[n].push(t);
    }

    let global = count_below(&assemble(&mesh, w, lambda, Bc::Neumann)?, sigma).count;
    let (mut sum_dirichlet, mut sum_neumann) = (0, 0);
    for (n, &(i, j)) in cubes.iter().enumerate() {
        let q = Rect::new(
            i as f64 * side,
            (i + 1) as f64 * side,
            j as f64 * side,
            (j + 1) as f64 * side,
        );
        let sub = sub_mesh(&mesh, &members[n], &q);
        sum_neumann += count_below(&assemble(&sub, w, lambda, Bc::Neumann)?, sigma).count;
        sum_dirichlet += count_below(&assemble(&sub, w, lambda, Bc::Dirichlet)?, sigma).count;
    }
    Ok(BracketingReport {
        m_level,
        lambda,
        sigma,
        cubes: cubes.len(),
        sum_dirichlet,
        global,
        sum_neumann,
        holds: sum_dirichlet <= global && global <= sum_neumann,
        gap_lower: global.saturating_sub(sum_dirichlet),
        gap_upper: sum_neumann.saturating_sub(global),
        distance_condition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClrRow {
    pub lambda: f64,
    pub fem_count: usize,
    /// `delta0(lambda V)`
    pub delta0: f64,
    /// `fem_count delta0^d`
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClrTable {
    pub rows: Vec<ClrRow>,
    /// `||V||_{ptilde,beta}`
    pub norm: f64,
    /// `max fem_count delta0^d`
    pub fitted_c: f64,
    /// Theil-Sen slope of `ln(fem_count delta0^d)` against `ln lambda` over
    /// rows with a nonzero count; 0 when fewer than two remain.
    pub slope: f64,
}

pub fn clr_bound_check(
    dom: &HolderSubgraphDomain,
    v: &PotentialField,
    es: &ExponentSet,
    lambda_grid: &[f64],
    mesh_h: f64,
    res: &QuadRes,
) -> Result<ClrTable> {
    check_grid(lambda_grid)?;
    check_resolution(v, dom, lambda_grid[lambda_grid.len() - 1], mesh_h)?;
    let norm = combined_norm(v, dom, es, res)?;
    let d = es.d;
    let mesh = triangulate(dom, &MeshOptions::new(mesh_h))?;
    let base = assemble(&mesh, v, 1.0, Bc::Neumann)?;
    let mut rows = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let fem_count = count_below(&base.with_lambda(lambda), 0.0).count;
        let dz = delta0(lambda * norm, dom.h_omega, d)?;
        rows.push(ClrRow {
            lambda,
            fem_count,
            delta0: dz,
            scaled: fem_count as f64 * dz.powi(d as i32),
        });
    }
    let fitted_c = rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
    let (lx, ly): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.fem_count > 0 && r.lambda > 0.0)
        .map(|r| (r.lambda.ln(), r.scaled.ln()))
        .unzip();
    let slope = if lx.len() >= 2 {
        theil_sen(&lx, &ly)?
    } else {
        0.0
    };
    Ok(ClrTable {
        rows,
        norm,
        fitted_c,
        slope,
    })
}

#[cfg(test)]
mod tests;
