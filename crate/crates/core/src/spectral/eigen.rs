use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::assemble::DiscreteOperator;
use super::ldl::{factor_inertia, Inertia};
use crate::error::{invalid, Result};

/// Zero-pivot tolerance relative to the largest entry.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountResult {
    pub count: usize,
    pub inertia: Inertia,
    /// Shift actually used; differs from the request after a zero pivot.
    pub sigma: f64,
    pub perturbed: bool,
}

/// Inertia of `K + lambda P - sigma M`.
pub fn shifted_inertia(op: &DiscreteOperator, sigma: f64) -> Inertia {
    factor_inertia(op.symbolic(), &op.shifted(sigma), ZERO_TOL)
}

/// Number of generalized eigenvalues below `sigma`. A zero pivot means
/// `sigma` sits on an eigenvalue; the shift is then moved down by
/// `1e-10 (1 + |sigma|)` so that eigenvalue is not counted.
pub fn count_below(op: &DiscreteOperator, sigma: f64) -> CountResult {
    let inertia = shifted_inertia(op, sigma);
    if inertia.zero == 0 {
        return CountResult {
            count: inertia.neg,
            inertia,
            sigma,
            perturbed: false,
        };
    }
    let s2 = sigma - 1e-10 * (1.0 + sigma.abs());
    let inertia = shifted_inertia(op, s2);
    CountResult {
        count: inertia.neg,
        inertia,
        sigma: s2,
        perturbed: true,
    }
}

/// The `k` smallest generalized eigenvalues, each bracketed by bisection on
/// [`count_below`] to absolute width `tol`.
pub fn lowest_eigenvalues(op: &DiscreteOperator, k: usize, tol: f64) -> Result<Vec<f64>> {
    if k == 0 || k > op.n() {
        return Err(invalid("k", format!("need 1 <= k <= {}", op.n())));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let count = |s: f64| count_below(op, s).count;
    let mut lo = -1.0;
    while count(lo) > 0 {
        lo *= 4.0;
    }
    let mut hi = 1.0;
    let mut c_hi = count(hi);
    while c_hi < k {
        hi *= 4.0;
        c_hi = count(hi);
    }
    // samples (sigma, count), kept sorted
    let mut samples: Vec<(f64, usize)> = vec![(lo, 0), (hi, c_hi)];
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        // tightest bracket with count(a) <= j < count(b)
        let mut a = samples
            .iter()
            .filter(|s| s.1 <= j)
            .map(|s| s.0)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut b = samples
            .iter()
            .filter(|s| s.1 > j)
            .map(|s| s.0)
            .fold(f64::INFINITY, f64::min);
        while b - a > tol {
            let mid = 0.5 * (a + b);
            let c = count(mid);
            samples.push((mid, c));
            if c <= j {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

/// Dense generalized eigenpairs `A x = mu M x` of `K + lambda P` against the
/// mass matrix, ascending. Intended for small problems.
pub fn dense_eigenpairs(op: &DiscreteOperator) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let a = op.shifted(0.0).to_dense();
    let m = op.mass.to_dense();
    let chol = m
        .cholesky()
        .ok_or_else(|| invalid("mass", "not positive definite"))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| invalid("mass", "singular Cholesky factor"))?;
    let c = &linv * a * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::new(c);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let lt_inv = linv.transpose();
    let mut vecs = DMatrix::zeros(op.n(), idx.len());
    for (c, &i) in idx.iter().enumerate() {
        let y: DVector<f64> = eig.eigenvectors.column(i).into();
        vecs.set_column(c, &(&lt_inv * y));
    }
    Ok((vals, vecs))
}
