//! Exponents and constants determined by the dimension `d`, the Hölder
//! exponent `gamma` and the Hölder constant `c` of the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Every derived exponent for one `(d, gamma, c)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub d: u32,
    pub gamma: f64,
    pub c: f64,
    /// `(d-1)/gamma + 1`
    pub mu: f64,
    /// Weight exponent of the boundary seminorm.
    pub beta: f64,
    /// Integrability exponent of the boundary seminorm.
    pub ptilde: f64,
    /// Sobolev exponent of the oscillatory domains.
    pub qstar: f64,
    pub pstar: f64,
    pub rtilde: f64,
    pub s: f64,
    pub sprime: f64,
    pub omega: f64,
    pub zeta: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

pub const C1: f64 = 16.0;

impl ExponentSet {
    /// Lower end `(d-1)/d` of the admissible gamma range.
    pub fn gamma_min(d: u32) -> f64 {
        (d as f64 - 1.0) / d as f64
    }

    /// `(d-1)/gamma`, the exponent that keeps turning up in counting arguments.
    pub fn dg(&self) -> f64 {
        (self.d as f64 - 1.0) / self.gamma
    }
}

pub fn compute_exponents(d: u32, gamma: f64, c: f64) -> Result<ExponentSet> {
    if d < 2 {
        return Err(invalid("d", format!("need d >= 2, got {d}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(
            "gamma",
            format!("need 0 < gamma <= 1, got {gamma}"),
        ));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid("c", format!("need c > 0, got {c}")));
    }
    let df = d as f64;
    let mu = (df - 1.0) / gamma + 1.0;
    let m2d = mu * mu / df;
    let beta = mu * (m2d - df) / (df + 1.0);
    let ptilde = mu * mu / (2.0 * df);
    let qstar = 1.0 / (0.5 - 1.0 / mu);
    let pstar = mu / 2.0;
    let rtilde = 1.0 / (1.0 / pstar - 1.0 / ptilde);
    let inv_sprime = (m2d - df) / (m2d + 1.0);
    let inv_s = (df + 1.0) / (m2d + 1.0);
    let omega = mu * inv_sprime;
    let zeta = inv_s * (-beta + (df - 1.0) / gamma);
    let base = (1.0 / C1)
        .min(2f64.powf(gamma) / (64.0 * c))
        .min(1.0 / (2f64.powf(gamma + 3.0) * c));
    let c0 = base.powf(1.0 / gamma);
    let c2 = c0 * C1.powf(1.0 / gamma);
    Ok(ExponentSet {
        d,
        gamma,
        c,
        mu,
        beta,
        ptilde,
        qstar,
        pstar,
        rtilde,
        s: 1.0 / inv_s,
        sprime: 1.0 / inv_sprime,
        omega,
        zeta,
        c0,
        c1: C1,
        c2,
    })
}

/// Global length scale `min(h_omega/sqrt(d), norm^{-1/2})`.
pub fn delta0(norm_value: f64, h_omega: f64, d: u32) -> Result<f64> {
    if !(norm_value >= 0.0) {
        return Err(invalid(
            "norm_value",
            format!("need >= 0, got {norm_value}"),
        ));
    }
    if !(h_omega > 0.0 && h_omega < 1.0) {
        return Err(invalid("h_omega", format!("need 0 < h < 1, got {h_omega}")));
    }
    let geometric = h_omega / (d as f64).sqrt();
    if norm_value == 0.0 {
        return Ok(geometric);
    }
    Ok(geometric.min(norm_value.powf(-0.5)))
}

/// Residuals of the four algebraic identities between the exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `|1/s + 1/s' - 1|`
    pub conjugate: f64,
    /// `|omega s' - (1 + (d-1)/gamma)|`
    pub omega_sprime: f64,
    /// `|omega s - beta|`
    pub omega_s: f64,
    /// `|-2 ptilde / s + 1/s' + d|`
    pub ptilde_balance: f64,
    /// `zeta s' + (d-1)/gamma - 1`, must be positive.
    pub zeta_margin: f64,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.conjugate
            .max(self.omega_sprime)
            .max(self.omega_s)
            .max(self.ptilde_balance)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.max_residual() < tol && self.zeta_margin > 0.0
    }
}

pub fn verify_exponent_identities(es: &ExponentSet) -> IdentityReport {
    let df = es.d as f64;
    let dg = es.dg();
    IdentityReport {
        conjugate: (1.0 / es.s + 1.0 / es.sprime - 1.0).abs(),
        omega_sprime: (es.omega * es.sprime - (1.0 + dg)).abs(),
        omega_s: (es.omega * es.s - es.beta).abs(),
        ptilde_balance: (-2.0 * es.ptilde / es.s + 1.0 / es.sprime + df).abs(),
        zeta_margin: es.zeta * es.sprime + dg - 1.0,
    }
}

/// Smallest gamma from which `beta < 1` is guaranteed: `2(d-1)/(2d-1)`.
pub fn beta_below_one_threshold(d: u32) -> f64 {
    let df = d as f64;
    2.0 * (df - 1.0) / (2.0 * df - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_quarters() {
        let es = compute_exponents(2, 0.75, 1.0).unwrap();
        assert!((es.mu - 7.0 / 3.0).abs() < 1e-14);
        // oracle: 30-digit evaluation of the closed forms
        assert!((es.ptilde - 1.361_111_111_111_111).abs() < 1e-13);
        assert!((es.beta - 0.561_728_395_061_728_4).abs() < 1e-13);
        assert!((1.0 / es.sprime - 0.194_029_850_746_268_66).abs() < 1e-13);
        assert!((1.0 / es.s - 0.805_970_149_253_731_3).abs() < 1e-13);
        assert!((es.omega - 0.452_736_318_407_960_2).abs() < 1e-13);
        assert!((es.zeta - 0.621_890_547_263_681_6).abs() < 1e-13);
        assert!((es.qstar - 14.0).abs() < 1e-10);
        assert!(verify_exponent_identities(&es).max_residual() < 1e-12);
    }

    #[test]
    fn endpoints() {
        let es = compute_exponents(2, 0.5, 1.0).unwrap();
        assert!((es.beta - 2.5).abs() < 1e-12);
        assert!((es.ptilde - 2.25).abs() < 1e-12);
        assert!(verify_exponent_identities(&es).zeta_margin > 0.0);
        let es = compute_exponents(2, 1.0, 1.0).unwrap();
        assert_eq!(es.beta, 0.0);
        assert_eq!(es.ptilde, 1.0);
        let es = compute_exponents(3, 2.0 / 3.0, 1.0).unwrap();
        assert!(verify_exponent_identities(&es).max_residual() < 1e-12);
    }

    #[test]
    fn constants() {
        let es = compute_exponents(2, 0.7, 3.0).unwrap();
        // min(1/16, 2^0.7/192, 1/(2^3.7 * 3)) = 2^0.7/192
        let expect = (2f64.powf(0.7) / 192.0).powf(1.0 / 0.7);
        assert!((es.c0 - expect).abs() < 1e-15);
        assert!((es.c0 - 1.094_387_433_438_682_3e-3).abs() < 1e-16);
        assert!((es.c2 - es.c0 * 16f64.powf(1.0 / 0.7)).abs() < 1e-15);
    }

    #[test]
    fn rejects() {
        assert!(compute_exponents(1, 0.5, 1.0).is_err());
        assert!(compute_exponents(2, 0.0, 1.0).is_err());
        assert!(compute_exponents(2, 1.1, 1.0).is_err());
        assert!(compute_exponents(2, 0.5, 0.0).is_err());
    }

    #[test]
    fn delta0_examples() {
        assert!((delta0(9.0, 0.5, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((delta0(0.0, 0.5, 2).unwrap() - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!((delta0(1.0, 0.9, 2).unwrap() - 0.9 / 2f64.sqrt()).abs() < 1e-15);
        assert!(delta0(-1.0, 0.5, 2).is_err());
    }
}
