//! Least-squares lines, mostly on log-log scale for rate checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinary least squares `y ≈ slope·x + intercept`. Returns
/// `(slope, intercept, rms residual)`. Needs two distinct `x` values.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len(), "least_squares: length mismatch");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    (slope, intercept, (ss / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

/// Fits `log value = slope·log N + intercept` over `(N, value)` pairs.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 3 {
        return Err(Error::domain(format!(
            "log-log fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, v) in points {
        if !(n > 0.0) || !(v > 0.0) || !v.is_finite() || !n.is_finite() {
            return Err(Error::domain(format!(
                "log-log fit needs positive values, got ({n}, {v})"
            )));
        }
        xs.push(n.ln());
        ys.push(v.ln());
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::domain("log-log fit needs distinct abscissae"));
    }
    let (slope, intercept, residual) = least_squares(&xs, &ys);
    Ok(LogLogFit {
        slope,
        intercept,
        residual,
    })
}
