//! Quartic variation, its standardization and the viscosity estimator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_sim::{PathKind, PathSample};
use crate::kernel::check_theta;

/// `Σ (v[i+1] − v[i])⁴` over raw observations.
pub fn quartic_variation_of(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let d2 = d * d;
            d2 * d2
        })
        .sum()
}

/// `V_N = Σ_{i=0}^{N−1} (u(t_{i+1}) − u(t_i))⁴`.
pub fn quartic_variation(path: &PathSample) -> f64 {
    quartic_variation_of(path.values())
}

/// `U_N = √N (V − 6/(πθ))`.
pub fn standardize(v: f64, n: usize, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok((n as f64).sqrt() * (v - 6.0 / (PI * theta)))
}

/// `θ̂ = 6/(πV)`; a zero variation means the observed path is constant.
pub fn theta_hat(v: f64) -> Result<f64> {
    if v == 0.0 {
        return Err(Error::DegeneratePath);
    }
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(format!("quartic variation must be positive, got {v}")));
    }
    Ok(6.0 / (PI * v))
}

/// `θ̄ = √N (θ̂ − θ)`.
pub fn theta_bar(theta_hat_value: f64, n: usize, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok((n as f64).sqrt() * (theta_hat_value - theta))
}

/// Cross terms of the binomial expansion of `V(u₀ + X)`:
/// `P = Σ_{k=0}^{3} C(4,k) Σ_i (Δ_i u₀)^k (Δ_i X)^{4−k}`, so that
/// `V(u₀ + X) = V(u₀) + P`.
pub fn remainder_terms(u0_path: &[f64], x_path: &[f64]) -> Result<f64> {
    if u0_path.len() != x_path.len() {
        return Err(Error::LengthMismatch {
            left: u0_path.len(),
            right: x_path.len(),
        });
    }
    let mut total = 0.0;
    for i in 0..u0_path.len().saturating_sub(1) {
        let a = u0_path[i + 1] - u0_path[i];
        let b = x_path[i + 1] - x_path[i];
        let b2 = b * b;
        total += b2 * b2 + 4.0 * a * b * b2 + 6.0 * a * a * b2 + 4.0 * a * a * a * b;
    }
    Ok(total)
}

/// One evaluation of the statistics on a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub n: usize,
    pub v: f64,
    pub u: f64,
    pub theta_hat: f64,
    pub theta_bar: f64,
    pub kind: PathKind,
    pub seed: Option<(u64, u64)>,
}

impl EstimateRecord {
    /// Computes all statistics for `path` under the true viscosity `theta`.
    pub fn from_path(path: &PathSample, theta: f64, seed: Option<(u64, u64)>) -> Result<Self> {
        Self::from_variation(quartic_variation(path), path.n(), theta, path.kind(), seed)
    }

    pub fn from_variation(
        v: f64,
        n: usize,
        theta: f64,
        kind: PathKind,
        seed: Option<(u64, u64)>,
    ) -> Result<Self> {
        let th = theta_hat(v)?;
        Ok(Self {
            n,
            v,
            u: standardize(v, n, theta)?,
            theta_hat: th,
            theta_bar: theta_bar(th, n, theta)?,
            kind,
            seed,
        })
    }
}
