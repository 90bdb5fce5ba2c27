use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::assemble::{assemble, Bc};
use super::eigen::{dense_eigenpairs, lowest_eigenvalues};
use super::mesh::{triangulate_profile, Mesh, MeshOptions};
use super::sparse::SymMatrix;
use crate::error::{invalid, Error, Result};
use crate::fit::theil_sen;
use crate::norms::PotentialField;
use crate::quadrature::triangle_rule;

/// Shapes used for the Poincare scaling check. Each is a fixed shape scaled
/// by `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoincareTemplate {
    /// `(0, delta)^2`.
    Square,
    /// Width `delta/2`, floor at `-delta/4`, top `f = delta/4 + delta psi(x/a)`.
    Hat,
}

impl PoincareTemplate {
    /// Profile `(xs, ys)` over a floor at height 0.
    pub fn profile(self, delta: f64) -> (Vec<f64>, Vec<f64>) {
        match self {
            Self::Square => (vec![0.0, delta], vec![delta, delta]),
            Self::Hat => {
                let a = 0.5 * delta;
                (vec![0.0, 0.5 * a, a], vec![0.5 * delta, delta, 0.5 * delta])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareFit {
    pub deltas: Vec<f64>,
    pub mu2: Vec<f64>,
    /// Theil-Sen slope of `ln mu2` against `ln delta`.
    pub slope: f64,
    /// `min mu2 delta^2`.
    pub c_p: f64,
}

/// Second Neumann eigenvalue over each `delta`, meshed at `rel_h * delta`.
pub fn estimate_poincare_constant(
    template: PoincareTemplate,
    delta_grid: &[f64],
    rel_h: f64,
) -> Result<PoincareFit> {
    if delta_grid.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} grid points, need 3",
            delta_grid.len()
        )));
    }
    if delta_grid.iter().any(|d| !(*d > 0.0)) {
        return Err(invalid("delta_grid", "must be positive"));
    }
    let mut mu2 = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        let (xs, ys) = template.profile(delta);
        let mesh = triangulate_profile(&xs, &ys, &MeshOptions::new(rel_h * delta))?;
        let op = assemble(&mesh, &PotentialField::Zero, 0.0, Bc::Neumann)?;
        let ev = lowest_eigenvalues(&op, 2, 1e-7 / (delta * delta))?;
        mu2.push(ev[1]);
    }
    let lx: Vec<f64> = delta_grid.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = mu2.iter().map(|m| m.ln()).collect();
    let slope = theil_sen(&lx, &ly)?;
    let c_p = mu2
        .iter()
        .zip(delta_grid)
        .map(|(m, d)| m * d * d)
        .fold(f64::INFINITY, f64::min);
    Ok(PoincareFit {
        deltas: delta_grid.to_vec(),
        mu2,
        slope,
        c_p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsEstimate {
    /// Smallest `|grad u|_2^2 / |u|_q^2` found.
    pub value: f64,
    /// Final value of each start; the last one is the eigenvector start.
    pub start_values: Vec<f64>,
    pub iterations: usize,
    /// Every start met the stationarity test within `max_iter`.
    pub converged: bool,
}

/// Stationarity test: squared dual norm of the gradient relative to the value.
const STATIONARY: f64 = 1e-10;

const WINDOW: usize = 100;
const STALL: f64 = 1e-5;

/// Dense largest problem accepted by [`estimate_ps_constant`].
const PS_MAX_DOFS: usize = 6000;

struct Functional<'a> {
    mesh: &'a Mesh,
    rule: Vec<([f64; 3], f64)>,
    areas: Vec<f64>,
    q: f64,
    k: SymMatrix,
}

impl Functional<'_> {
    /// `int |u|^q` and, if asked, its gradient divided by `q`.
    fn lq(&self, u: &DVector<f64>, grad: Option<&mut DVector<f64>>) -> f64 {
        let mut s = 0.0;
        let mut g = grad;
        if let Some(g) = g.as_deref_mut() {
            g.fill(0.0);
        }
        for (t, &area) in self.mesh.triangles.iter().zip(&self.areas) {
            let uv = [u[t[0]], u[t[1]], u[t[2]]];
            for (l, w) in &self.rule {
                let x = l[0] * uv[0] + l[1] * uv[1] + l[2] * uv[2];
                let wa = w * area;
                let p = self.pow(x.abs());
                s += wa * p * x * x;
                if let Some(g) = g.as_deref_mut() {
                    let d = wa * p * x;
                    for i in 0..3 {
                        g[t[i]] += d * l[i];
                    }
                }
            }
        }
        s
    }

    /// `t^(q-2)`.
    fn pow(&self, t: f64) -> f64 {
        let e = self.q - 2.0;
        if e == e.round() && e < 64.0 {
            t.powi(e as i32)
        } else {
            t.powf(e)
        }
    }

    fn ku(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(self.k.matvec(u.as_slice()))
    }

    fn value(&self, u: &DVector<f64>) -> f64 {
        let e = u.dot(&self.ku(u));
        e / self.lq(u, None).powf(2.0 / self.q)
    }
}

/// Upper estimate of `min |grad u|_2^2 / |u|_q^2` over mean-zero P1
/// functions on the region under the profile `(xs, ys)`.
///
/// Projected gradient descent in the `H^1` metric with Armijo backtracking,
/// from five random starts and the second Neumann eigenvector.
pub fn estimate_ps_constant(
    xs: &[f64],
    ys: &[f64],
    qstar: f64,
    target_h: f64,
    max_iter: usize,
    seed: u64,
) -> Result<PsEstimate> {
    if !(qstar >= 2.0) || !qstar.is_finite() {
        return Err(invalid("qstar", "need 2 <= q < inf"));
    }
    let mesh = triangulate_profile(xs, ys, &MeshOptions::new(target_h))?;
    let n = mesh.vertices.len();
    if n > PS_MAX_DOFS {
        return Err(Error::MeshBudget {
            vertices: n,
            limit: PS_MAX_DOFS,
        });
    }
    let op = assemble(&mesh, &PotentialField::Zero, 0.0, Bc::Neumann)?;
    let m = op.mass.to_dense();
    let chol = (op.stiffness.to_dense() + &m)
        .cholesky()
        .ok_or_else(|| invalid("mesh", "H1 Gram matrix not positive definite"))?;
    let m1 = &m * DVector::from_element(n, 1.0);
    let total = m1.sum();
    let project = |v: &mut DVector<f64>| {
        let c = m1.dot(v) / total;
        v.add_scalar_mut(-c);
    };
    let areas = mesh
        .triangles
        .iter()
        .map(|t| {
            let (a, b, c) = (
                mesh.vertices[t[0]],
                mesh.vertices[t[1]],
                mesh.vertices[t[2]],
            );
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        })
        .collect();
    let fun = Functional {
        mesh: &mesh,
        rule: triangle_rule(8),
        areas,
        q: qstar,
        k: op.stiffness.clone(),
    };
    let normalize = |u: &mut DVector<f64>| {
        let s = fun.lq(u, None).powf(1.0 / fun.q);
        *u /= s;
    };

    let mut starts = Vec::with_capacity(6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..5 {
        starts.push(DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)));
    }
    let (_, vecs) = dense_eigenpairs(&op)?;
    starts.push(vecs.column(1).into_owned());

    let mut start_values = Vec::with_capacity(starts.len());
    let mut iterations = 0;
    let mut converged = true;
    let mut gs = DVector::zeros(n);
    for mut u in starts {
        project(&mut u);
        normalize(&mut u);
        let mut r = fun.value(&u);
        let mut step: f64 = 1.0;
        let mut grow = false;
        let mut done = false;
        let mut history = Vec::with_capacity(max_iter);
        for _ in 0..max_iter {
            iterations += 1;
            // with |u|_q = 1: grad R = 2 (K u - (u^T K u) g), g = grad(|u|_q^q)/q
            let ku = fun.ku(&u);
            let e = u.dot(&ku);
            fun.lq(&u, Some(&mut gs));
            let grad = 2.0 * (ku - e * &gs);
            let mut d = chol.solve(&grad);
            project(&mut d);
            let slope = grad.dot(&d);
            if slope <= STATIONARY * r {
                done = true;
                break;
            }
            if grow {
                step = (2.0 * step).min(1e6);
            }
            let mut accepted = false;
            let mut tries = 0;
            while step > 1e-16 {
                let mut trial = &u - step * &d;
                project(&mut trial);
                normalize(&mut trial);
                let rt = fun.value(&trial);
                if rt <= r - 1e-4 * step * slope {
                    u = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
                tries += 1;
                step *= 0.5;
            }
            grow = tries == 0;
            history.push(r);
            let k = history.len();
            // stalled: less than STALL relative progress over WINDOW steps
            if !accepted || (k > WINDOW && history[k - 1 - WINDOW] - r < STALL * r) {
                done = true;
                break;
            }
        }
        converged &= done;
        start_values.push(r);
    }
    let value = start_values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PsEstimate {
        value,
        start_values,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn squares_scale_exactly() {
        let grid = [0.5, 0.25, 0.125];
        let fit = estimate_poincare_constant(PoincareTemplate::Square, &grid, 1.0 / 16.0).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-6, "{}", fit.slope);
        assert!((fit.c_p - PI * PI).abs() < 0.02 * PI * PI);
        assert!(estimate_poincare_constant(PoincareTemplate::Hat, &[0.5], 0.1).is_err());
    }

    #[test]
    fn q2_reduces_to_mu2() {
        let (xs, ys) = (vec![0.0, 1.0], vec![1.0, 1.0]);
        let est = estimate_ps_constant(&xs, &ys, 2.0, 1.0 / 8.0, 200, 1).unwrap();
        let mesh = triangulate_profile(&xs, &ys, &MeshOptions::new(1.0 / 8.0)).unwrap();
        let op = assemble(&mesh, &PotentialField::Zero, 0.0, Bc::Neumann).unwrap();
        let (vals, _) = dense_eigenpairs(&op).unwrap();
        assert!(
            (est.value - vals[1]).abs() < 1e-6 * vals[1],
            "{} vs {}",
            est.value,
            vals[1]
        );
        assert!(est
            .start_values
            .iter()
            .all(|v| *v >= vals[1] * (1.0 - 1e-9)));
    }
}
