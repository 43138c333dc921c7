//! Small dense helpers shared by the analytic modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Solves `H x = b` for symmetric positive definite `H`.
pub fn spd_solve(h: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(String::new()))?;
    Ok(chol.solve(b))
}

pub fn spd_inverse(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(String::new()))?;
    Ok(chol.inverse())
}

/// Least-squares slope of `log y` against `log x`. `None` if any value is
/// non-positive or fewer than two points are given.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Pairwise (tree) summation; the result depends only on the order of `v`.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if v.len() <= BLOCK {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
