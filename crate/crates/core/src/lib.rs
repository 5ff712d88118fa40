//! Simulation and inference toolkit for the stochastic heat equation
//!
//! ```text
//!     du/dt = (θ/2) Δu + b(u) + Ẇ,    u(0, x) = 0,
//! ```
//!
//! driven by space-time white noise. The crate generates temporal paths
//! `u(t_i, x)` on the grid `t_i = i/N` (exactly in law for `b ≡ 0`, via a
//! finite-difference scheme otherwise), evaluates the quartic variation
//! `V_N = Σ (u(t_{i+1}) − u(t_i))⁴` and the viscosity estimator
//! `θ̂ = 6/(π V_N)`, and checks Monte Carlo output against exact Gaussian
//! moment oracles.
//!
//! Module map:
//!
//! * [`kernel`]: heat kernel, temporal covariance, increment covariances.
//! * [`gaussian_sim`]: exact simulation of the linear solution.
//! * [`field_sim`]: semi-implicit finite-difference solver for the semilinear equation.
//! * [`variation`]: quartic variation, standardization, estimator.
//! * [`wick`]: exact moments of the quartic variation and limit constants.
//! * [`stats`]: distribution distances and dependence diagnostics.
//! * [`experiments`]: declarative Monte Carlo experiments and CSV reports.

pub mod error;
pub mod experiments;
pub mod field_sim;
pub mod gaussian_sim;
pub mod kernel;
pub mod linalg;
pub mod parallel;
pub mod quadrature;
pub mod stats;
pub mod variation;
pub mod wick;

pub use error::{Error, Result};
pub use field_sim::{simulate_coupled, simulate_field, CoupledPaths, FieldGridSpec, FieldSolver};
pub use gaussian_sim::{
    build_temporal_covariance, cached_temporal_covariance, sample_path, PathKind, PathSample,
    SeedSpec, TemporalCovariance,
};
pub use kernel::{cov_u0, heat_kernel, increment_cov, pniq, pniq_quadrature, Drift, ModelParams, TimeGrid};
pub use variation::{quartic_variation, remainder_terms, standardize, theta_bar, theta_hat, EstimateRecord};
pub use wick::{
    asymptotic_constants, expected_quartic, isserlis_cov_quartic, variance_quartic,
    AsymptoticConstants,
};
