//! Closed-form heat-kernel quantities for the linear solution `u₀`.
//!
//! The temporal covariance of `u₀(·, x)` at a fixed point is
//!
//! ```text
//!     C(s, t) = (2πθ)^{-1/2} (√(t+s) − √|t−s|)
//! ```
//!
//! and everything here is built from it. The Green kernel itself is only
//! evaluated at strictly positive times.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::quadrature;

/// Drift coefficient `b` of the semilinear equation. All variants are
/// globally Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drift {
    #[default]
    Zero,
    /// `b(u) = c·u`
    Linear { c: f64 },
    /// `b(u) = cos(u)`
    Cosine,
    /// `b(u) = u / (1 + u²)`
    BoundedRational,
}

impl Drift {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Drift::Zero => 0.0,
            Drift::Linear { c } => c * u,
            Drift::Cosine => u.cos(),
            Drift::BoundedRational => u / (1.0 + u * u),
        }
    }

    /// Recorded global Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Drift::Zero => 0.0,
            Drift::Linear { c } => c.abs(),
            Drift::Cosine => 1.0,
            Drift::BoundedRational => 1.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Drift::Zero => true,
            Drift::Linear { c } => c == 0.0,
            _ => false,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Drift::Zero => "zero".into(),
            Drift::Linear { c } => format!("linear({c})"),
            Drift::Cosine => "cosine".into(),
            Drift::BoundedRational => "bounded_rational".into(),
        }
    }
}

/// Viscosity and drift of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    theta: f64,
    drift: Drift,
}

impl ModelParams {
    pub fn new(theta: f64, drift: Drift) -> Result<Self> {
        check_theta(theta)?;
        if let Drift::Linear { c } = drift {
            if !c.is_finite() {
                return Err(Error::domain("linear drift coefficient must be finite"));
            }
        }
        Ok(Self { theta, drift })
    }

    /// Linear equation (`b ≡ 0`).
    pub fn linear(theta: f64) -> Result<Self> {
        Self::new(theta, Drift::Zero)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn drift(&self) -> Drift {
        self.drift
    }
}

/// Equidistant partition `t_i = i/N` of the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    n: usize,
}

impl TimeGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("time grid needs N >= 1"));
        }
        Ok(Self { n })
    }

    /// Number of intervals `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// `t_i = i/N`; exact at both endpoints.
    pub fn t(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|i| self.t(i))
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("theta must be positive and finite, got {theta}")))
    }
}

/// Green kernel evaluated as `G(θt, x) = (2πθt)^{-1/2} exp(−x²/(2θt))`.
pub fn heat_kernel(t: f64, x: f64, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if !(t > 0.0) {
        return Err(Error::domain(format!("heat kernel needs t > 0, got {t}")));
    }
    let v = theta * t;
    Ok((-x * x / (2.0 * v)).exp() / (2.0 * PI * v).sqrt())
}

/// Temporal covariance `E[u₀(s,x) u₀(t,x)]`.
pub fn cov_u0(s: f64, t: f64, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::domain(format!("times must be nonnegative, got s={s}, t={t}")));
    }
    Ok(((t + s).sqrt() - (t - s).abs().sqrt()) / (2.0 * PI * theta).sqrt())
}

fn check_index(what: &'static str, index: usize, lo: usize, hi: usize) -> Result<()> {
    if index < lo || index > hi {
        return Err(Error::IndexOutOfRange {
            what,
            index,
            expected: format!("{lo}..={hi}"),
        });
    }
    Ok(())
}

/// `E[Δ_i u₀ Δ_j u₀]` with `Δ_i u₀ = u₀(t_{i+1}) − u₀(t_i)`.
pub fn increment_cov(i: usize, j: usize, grid: &TimeGrid, theta: f64) -> Result<f64> {
    let last = grid.n() - 1;
    check_index("i", i, 0, last)?;
    check_index("j", j, 0, last)?;
    let (ti, ti1) = (grid.t(i), grid.t(i + 1));
    let (tj, tj1) = (grid.t(j), grid.t(j + 1));
    Ok(cov_u0(ti1, tj1, theta)? - cov_u0(ti, tj1, theta)? - cov_u0(ti1, tj, theta)?
        + cov_u0(ti, tj, theta)?)
}

/// Full `N×N` increment covariance matrix.
///
/// Entries depend only on `i + j` and `|i − j|`, so they are assembled from a
/// table of `√k`; agrees with [`increment_cov`] entrywise.
pub fn increment_cov_matrix(grid: &TimeGrid, theta: f64) -> Result<SymMatrix> {
    check_theta(theta)?;
    let n = grid.n();
    let root: Vec<f64> = (0..=2 * n + 2).map(|k| (k as f64).sqrt()).collect();
    let scale = 1.0 / (2.0 * PI * theta * n as f64).sqrt();
    // second difference in the sum direction, symmetric second difference in the gap
    let sum_part: Vec<f64> = (0..=2 * n - 2)
        .map(|s| root[s + 2] - 2.0 * root[s + 1] + root[s])
        .collect();
    let gap_part: Vec<f64> = (0..n)
        .map(|d| {
            let below = if d == 0 { root[1] } else { root[d - 1] };
            root[d + 1] + below - 2.0 * root[d]
        })
        .collect();
    Ok(SymMatrix::from_fn(n, |i, j| {
        scale * (sum_part[i + j] + gap_part[i.abs_diff(j)])
    }))
}

/// `P_N(i, q) = E[Δ_i u₀ · u₀(t_q)]`, closed form.
pub fn pniq(n: usize, i: usize, q: usize, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if n == 0 {
        return Err(Error::domain("N must be >= 1"));
    }
    check_index("i", i, 0, n - 1)?;
    check_index("q", q, 1, n)?;
    let r = |k: usize| (k as f64).sqrt();
    let value = r(i + 1 + q) - r(i + q) - r((i + 1).abs_diff(q)) + r(i.abs_diff(q));
    Ok(value / (2.0 * PI * theta * n as f64).sqrt())
}

/// Absolute tolerance of [`pniq_quadrature`].
pub const PNIQ_QUAD_TOL: f64 = 1e-10;

/// `P_N(i, q)` from its time-integral representation
///
/// ```text
///     ∫₀^{t_{i+1}∧t_q} (2πθ(t_{i+1}+t_q−2a))^{-1/2} da − ∫₀^{t_i∧t_q} (2πθ(t_i+t_q−2a))^{-1/2} da
/// ```
///
/// by adaptive Gauss-Kronrod quadrature. Each integral is mapped through
/// `a = m(1 − s²)`, `m` the upper limit, which removes the inverse square
/// root singularity at `a = m` when the two times coincide.
pub fn pniq_quadrature(n: usize, i: usize, q: usize, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if n == 0 {
        return Err(Error::domain("N must be >= 1"));
    }
    check_index("i", i, 0, n - 1)?;
    check_index("q", q, 1, n)?;
    let grid = TimeGrid::new(n)?;
    let tq = grid.t(q);
    let c = 1.0 / (2.0 * PI * theta).sqrt();
    let piece = |t: f64| -> Result<f64> {
        let m = t.min(tq);
        if m == 0.0 {
            return Ok(0.0);
        }
        let gap = (t - tq).abs();
        // da = 2ms ds, t + tq − 2a = |t − tq| + 2ms²
        let integrand = |s: f64| {
            let denom = gap + 2.0 * m * s * s;
            if denom == 0.0 {
                (2.0 * m).sqrt()
            } else {
                2.0 * m * s / denom.sqrt()
            }
        };
        Ok(quadrature::integrate(integrand, 0.0, 1.0, 0.5 * PNIQ_QUAD_TOL)?.value)
    };
    Ok(c * (piece(grid.t(i + 1))? - piece(grid.t(i))?))
}
