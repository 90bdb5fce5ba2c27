use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::ldl::Symbolic;
use super::mesh::Mesh;
use super::sparse::{SymMatrix, SymPattern};
use crate::domain::Point;
use crate::error::{Error, Result};
use crate::norms::PotentialField;
use crate::quadrature::{gauss_jacobi, gauss_legendre, Rule, TRI7};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bc {
    Neumann,
    Dirichlet,
}

/// Stiffness, mass and potential matrices of one mesh and one potential.
#[derive(Debug)]
pub struct DiscreteOperator {
    pub stiffness: SymMatrix,
    pub mass: SymMatrix,
    pub potential: SymMatrix,
    pub bc: Bc,
    pub lambda: f64,
    /// Mesh vertex of each unknown.
    pub dofs: Vec<usize>,
    symbolic: OnceLock<Symbolic>,
}

impl Clone for DiscreteOperator {
    fn clone(&self) -> Self {
        Self {
            stiffness: self.stiffness.clone(),
            mass: self.mass.clone(),
            potential: self.potential.clone(),
            bc: self.bc,
            lambda: self.lambda,
            dofs: self.dofs.clone(),
            symbolic: self.symbolic.clone(),
        }
    }
}

impl DiscreteOperator {
    pub fn n(&self) -> usize {
        self.stiffness.n()
    }

    /// Ordering and structure, computed on first use.
    pub fn symbolic(&self) -> &Symbolic {
        self.symbolic
            .get_or_init(|| Symbolic::analyze(self.stiffness.pattern.clone()))
    }

    /// `K + lambda P - sigma M`.
    pub fn shifted(&self, sigma: f64) -> SymMatrix {
        SymMatrix::combine(&[
            (1.0, &self.stiffness),
            (self.lambda, &self.potential),
            (-sigma, &self.mass),
        ])
    }

    /// Same matrices with another coupling constant.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut o = self.clone();
        o.lambda = lambda;
        o
    }
}

fn grads(p: [Point; 3]) -> ([[f64; 2]; 3], f64) {
    let area2 =
        (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        g[i] = [(a[1] - b[1]) / area2, (b[0] - a[0]) / area2];
    }
    (g, 0.5 * area2)
}

/// Weighted points `(barycentric, weight)` integrating `h^alpha g` over a
/// triangle where `h` is affine with vertex values `hs >= 0`. The returned
/// weights already contain `h^alpha` and the area.
pub fn singular_rule(hs: [f64; 3], area: f64, alpha: f64) -> Vec<([f64; 3], f64)> {
    let mut ord = [0usize, 1, 2];
    ord.sort_by(|&i, &j| hs[i].total_cmp(&hs[j]));
    let (a, b, c) = (ord[0], ord[1], ord[2]);
    let (ha, hb, hc) = (hs[a], hs[b], hs[c]);
    let mut out = Vec::new();
    let gl = gauss_legendre(6);
    if hb <= 1e-14 * hc {
        // an edge on the graph: collapse at the top vertex, h = hc (1 - u)
        let gj = gauss_jacobi(6, alpha);
        for (t, wt) in gj.x.iter().zip(&gj.w) {
            let u = 1.0 - t;
            for (w, ww) in gl.x.iter().zip(&gl.w) {
                let mut l = [0.0; 3];
                l[c] = 1.0 - u;
                l[a] = u * (1.0 - w);
                l[b] = u * w;
                out.push((l, 2.0 * area * u * hc.powf(alpha) * wt * ww));
            }
        }
        return out;
    }
    // collapse at the lowest vertex: h = ha + u g(w)
    let g0 = hb - ha;
    let g1 = hc - hb;
    let wpanels = graded_panels(g0 / (g0 + g1).max(1e-300));
    for (w0, w1) in wpanels {
        for (xw, ww) in gl.x.iter().zip(&gl.w) {
            let w = w0 + (w1 - w0) * xw;
            let wgt_w = ww * (w1 - w0);
            let g = g0 + w * g1;
            let push = |u: f64, wu: f64, hpow: f64, out: &mut Vec<([f64; 3], f64)>| {
                let mut l = [0.0; 3];
                l[a] = 1.0 - u;
                l[b] = u * (1.0 - w);
                l[c] = u * w;
                out.push((l, 2.0 * area * wgt_w * wu * hpow));
            };
            if ha == 0.0 {
                // int u^{alpha+1} g^alpha P(u) du
                let gj: &Rule = gauss_jacobi(4, alpha + 1.0);
                for (u, wu) in gj.x.iter().zip(&gj.w) {
                    push(*u, *wu, g.powf(alpha), &mut out);
                }
            } else {
                for (u0, u1) in graded_panels(ha / g) {
                    for (xu, wu) in gl.x.iter().zip(&gl.w) {
                        let u = u0 + (u1 - u0) * xu;
                        push(u, wu * (u1 - u0) * u, (ha + u * g).powf(alpha), &mut out);
                    }
                }
            }
        }
    }
    out
}

/// Panels of `[0,1]` refined geometrically toward 0 down to about `scale`.
fn graded_panels(scale: f64) -> Vec<(f64, f64)> {
    if scale >= 0.25 {
        return vec![(0.0, 1.0)];
    }
    let mut edges = vec![1.0];
    let mut x = 1.0;
    let stop = scale.max(1e-14);
    while x > stop {
        x *= 0.5;
        edges.push(x);
    }
    edges.push(0.0);
    edges.reverse();
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

/// P1 assembly. Stiffness and mass are exact; the potential uses a degree-5
/// rule on bounded potentials and a collapsed rule matched to `h^alpha` on
/// subgraph triangles for a singular height power.
pub fn assemble(mesh: &Mesh, v: &PotentialField, lambda: f64, bc: Bc) -> Result<DiscreteOperator> {
    v.validate()?;
    let n = mesh.vertices.len();
    let alpha = v.singular_exponent();
    if alpha <= -1.0 {
        return Err(Error::NonIntegrable { exponent: alpha });
    }
    let pattern = Arc::new(SymPattern::from_pairs(
        n,
        mesh.triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]),
    ));
    let mut k = SymMatrix::zeros(pattern.clone());
    let mut m = SymMatrix::zeros(pattern.clone());
    let mut p = SymMatrix::zeros(pattern);
    let coef = match v {
        PotentialField::HeightPower { coef, .. } => *coef,
        _ => 0.0,
    };
    for (ti, t) in mesh.triangles.iter().enumerate() {
        let pts = [
            mesh.vertices[t[0]],
            mesh.vertices[t[1]],
            mesh.vertices[t[2]],
        ];
        let (g, area) = grads(pts);
        let mut local_p = [[0.0; 3]; 3];
        if !v.is_zero() {
            let chart = mesh.in_chart[ti];
            if chart && alpha < 0.0 {
                let hs = [
                    mesh.heights[t[0]].max(0.0),
                    mesh.heights[t[1]].max(0.0),
                    mesh.heights[t[2]].max(0.0),
                ];
                for (l, w) in singular_rule(hs, area, alpha) {
                    for i in 0..3 {
                        for j in 0..3 {
                            local_p[i][j] -= coef * w * l[i] * l[j];
                        }
                    }
                }
            } else {
                for (l, w) in TRI7.iter() {
                    let x = [
                        l[0] * pts[0][0] + l[1] * pts[1][0] + l[2] * pts[2][0],
                        l[0] * pts[0][1] + l[1] * pts[1][1] + l[2] * pts[2][1],
                    ];
                    let h = if chart {
                        l[0] * mesh.heights[t[0]]
                            + l[1] * mesh.heights[t[1]]
                            + l[2] * mesh.heights[t[2]]
                    } else {
                        f64::NAN
                    };
                    let val = v.value_with_height(x, h);
                    for i in 0..3 {
                        for j in 0..3 {
                            local_p[i][j] += area * w * val * l[i] * l[j];
                        }
                    }
                }
            }
        }
        for i in 0..3 {
            for j in 0..=i {
                let (gi, gj) = (g[i], g[j]);
                k.add(t[i], t[j], area * (gi[0] * gj[0] + gi[1] * gj[1]));
                m.add(
                    t[i],
                    t[j],
                    area * if i == j { 1.0 / 6.0 } else { 1.0 / 12.0 },
                );
                if local_p[i][j] != 0.0 {
                    p.add(t[i], t[j], 0.5 * (local_p[i][j] + local_p[j][i]));
                }
            }
        }
    }
    let dofs: Vec<usize>;
    if bc == Bc::Dirichlet {
        let keep: Vec<bool> = mesh.boundary.iter().map(|b| !b).collect();
        dofs = (0..n).filter(|&i| keep[i]).collect();
        k = k.restrict(&keep);
        let pat = k.pattern.clone();
        m = m.restrict(&keep);
        m.pattern = pat.clone();
        p = p.restrict(&keep);
        p.pattern = pat;
    } else {
        dofs = (0..n).collect();
    }
    Ok(DiscreteOperator {
        stiffness: k,
        mass: m,
        potential: p,
        bc,
        lambda,
        dofs,
        symbolic: OnceLock::new(),
    })
}
