//! Slope fits for log-log scaling checks.

use crate::error::{Error, Result};

/// Ordinary least-squares slope.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae equal".into()));
    }
    Ok(sxy / sxx)
}

/// Theil-Sen slope: median of the pairwise slopes.
pub fn theil_sen(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x, y)?;
    let mut s = Vec::new();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x[j] != x[i] {
                s.push((y[j] - y[i]) / (x[j] - x[i]));
            }
        }
    }
    if s.is_empty() {
        return Err(Error::DegenerateFit("all abscissae equal".into()));
    }
    s.sort_by(f64::total_cmp);
    let k = s.len();
    Ok(if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    })
}

fn check(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DegenerateFit("length mismatch".into()));
    }
    if x.len() < 2 || !x.iter().chain(y).all(|v| v.is_finite()) {
        return Err(Error::DegenerateFit(format!("{} finite points", x.len())));
    }
    Ok(())
}
