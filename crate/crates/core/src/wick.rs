//! Exact finite-`N` moments of the quartic variation of a Gaussian path.
//!
//! For centered jointly Gaussian increments with covariance matrix `C`,
//! Isserlis' theorem gives
//!
//! ```text
//!     E[V]   = 3 Σ_i C_ii²
//!     Var[V] = Σ_{i,j} (72 C_ii C_jj C_ij² + 24 C_ij⁴)
//! ```
//!
//! The `24 c⁴` part is the fourth-chaos contribution and `72 abc²` the
//! second-chaos one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{check_theta, increment_cov_matrix, TimeGrid};
use crate::linalg::{cholesky, SymMatrix};

/// Limit constants of the quartic variation and the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub theta: f64,
    /// `6/(πθ)`
    pub limit: f64,
    /// `384/(π²θ²)`
    pub sigma_theta_sq: f64,
    /// `(π²θ⁴/36) · σ_θ²`
    pub sigma1_theta_sq: f64,
}

pub fn asymptotic_constants(theta: f64) -> Result<AsymptoticConstants> {
    check_theta(theta)?;
    let sigma_theta_sq = 384.0 / (PI * PI * theta * theta);
    Ok(AsymptoticConstants {
        theta,
        limit: 6.0 / (PI * theta),
        sigma_theta_sq,
        sigma1_theta_sq: PI * PI * theta.powi(4) / 36.0 * sigma_theta_sq,
    })
}

/// `Cov(X⁴, Y⁴) = 72abc² + 24c⁴` for centered Gaussians with `Var X = a`,
/// `Var Y = b`, `Cov(X, Y) = c`.
pub fn isserlis_cov_quartic(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a >= 0.0 && b >= 0.0) {
        return Err(Error::domain(format!("variances must be nonnegative, got a={a}, b={b}")));
    }
    let c2 = c * c;
    let ab = a * b;
    if c2 > ab * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "Cauchy-Schwarz violated: c² = {c2:e} > ab = {ab:e}"
        )));
    }
    Ok(72.0 * ab * c2 + 24.0 * c2 * c2)
}

/// Pairwise summation; keeps rounding error at `O(log n)` ulps.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 64;
    if xs.len() <= BASE {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `E[V] = 3 Σ_i C_ii²`.
pub fn expected_quartic(cov: &SymMatrix) -> f64 {
    let terms: Vec<f64> = cov.diag().iter().map(|d| 3.0 * d * d).collect();
    pairwise_sum(&terms)
}

/// `Var[V] = Σ_{i,j} Cov(Δ_i⁴, Δ_j⁴)`.
///
/// The matrix must be positive semidefinite; this is checked by a Cholesky
/// factorization (with the same `1e-10` jitter allowance as path simulation).
pub fn variance_quartic(cov: &SymMatrix) -> Result<f64> {
    check_psd(cov)?;
    Ok(variance_quartic_sum(cov))
}

fn check_psd(cov: &SymMatrix) -> Result<()> {
    if !cov.is_symmetric() {
        return Err(Error::domain("covariance matrix is not symmetric"));
    }
    let scale = cov.diag().iter().cloned().fold(0.0, f64::max);
    match cholesky(cov, 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        Ok(_) => Ok(()),
        Err(minor) => Err(Error::domain(format!(
            "covariance matrix is not positive semidefinite (leading minor {minor})"
        ))),
    }
}

fn variance_quartic_sum(cov: &SymMatrix) -> f64 {
    let n = cov.n();
    let diag = cov.diag();
    let mut row_terms = vec![0.0; n];
    let rows: Vec<f64> = (0..n)
        .map(|i| {
            let row = cov.row(i);
            for (j, t) in row_terms.iter_mut().enumerate() {
                let c2 = row[j] * row[j];
                *t = 72.0 * diag[i] * diag[j] * c2 + 24.0 * c2 * c2;
            }
            pairwise_sum(&row_terms)
        })
        .collect();
    pairwise_sum(&rows)
}

/// Exact `(E[V_N], Var[V_N])` for the linear solution on the grid `i/N`.
pub fn linear_quartic_moments(n: usize, theta: f64) -> Result<(f64, f64)> {
    let cov = increment_cov_matrix(&TimeGrid::new(n)?, theta)?;
    Ok((expected_quartic(&cov), variance_quartic(&cov)?))
}
