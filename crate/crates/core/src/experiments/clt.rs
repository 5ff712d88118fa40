use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::gaussian_sim::{PathKind, SeedSpec};
use crate::stats::{bootstrap_se, ks_to_normal, mean_se, variance_se, wasserstein1_to_normal};
use crate::variation::EstimateRecord;
use crate::wick::{asymptotic_constants, linear_quartic_moments};

use super::config::{ExperimentConfig, RunOptions};
use super::fit::fit_loglog_slope;
use super::report::ExperimentReport;
use super::source::{default_source, map_paths, stream_seed, PathSource};

/// Quantile levels for empirical W₁.
pub const W1_LEVELS: usize = 1000;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
const FLOOR_REPEATS: usize = 20;

pub fn run_clt_experiment(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    let source = default_source(config)?;
    run_clt_experiment_with(config, source.as_ref(), opts)
}

/// Distances of `U_N` to its Gaussian limit `N(0, σ_θ²)` per `N`. For exact
/// linear paths the same distances are also reported against the exact
/// finite-`N` law `N(√N(E V_N − 6/(πθ)), N Var V_N)` of the oracle.
pub fn run_clt_experiment_with(
    config: &ExperimentConfig,
    source: &dyn PathSource,
    opts: RunOptions,
) -> Result<ExperimentReport> {
    config.validate()?;
    let name = config.kind.name();
    let theta = config.theta;
    let k = asymptotic_constants(theta)?;
    let sigma = k.sigma_theta_sq.sqrt();
    let m = config.replicates;
    let mut report = ExperimentReport::new(config);
    let mut w1_points = Vec::new();
    for &n in &config.n_list {
        let start = Instant::now();
        let first = report.rows.len();
        let seed = stream_seed(config.master_seed, n as u64);
        if let Some(j) = source.prepare(n)? {
            report.metadata.jitter.insert(n, j);
        }
        let kind = source.kind();
        let us = map_paths(source, n, m, seed, opts.workers, |p| {
            Ok(EstimateRecord::from_path(p, theta, None)?.u)
        })?;
        let (mu, mu_err) = mean_se(&us);
        let (var, var_err) = variance_se(&us);
        report.push(name, n, "mean_u", mu, Some(mu_err), seed);
        report.push(name, n, "var_u", var, Some(var_err), seed);
        report.push(name, n, "var_u_ratio", var / k.sigma_theta_sq, Some(var_err / k.sigma_theta_sq), seed);

        let ks = ks_to_normal(&us, 0.0, sigma)?;
        let ks_err = bootstrap_se(&us, BOOTSTRAP_RESAMPLES, SeedSpec::derive(seed, 1), |s| {
            ks_to_normal(s, 0.0, sigma).unwrap_or(f64::NAN)
        });
        report.push(name, n, "ks_limit", ks, Some(ks_err), seed);
        let w1 = wasserstein1_to_normal(&us, 0.0, sigma, W1_LEVELS)?;
        let w1_err = bootstrap_se(&us, BOOTSTRAP_RESAMPLES, SeedSpec::derive(seed, 2), |s| {
            wasserstein1_to_normal(s, 0.0, sigma, W1_LEVELS).unwrap_or(f64::NAN)
        });
        report.push(name, n, "w1_limit", w1, Some(w1_err), seed);
        let (floor, floor_err) = w1_noise_floor(m, sigma, SeedSpec::derive(seed, 3))?;
        report.push(name, n, "w1_noise_floor", floor, Some(floor_err), seed);
        report.push(name, n, "w1_excess", w1 - floor, Some(w1_err.hypot(floor_err)), seed);
        w1_points.push((n as f64, w1));

        if kind == PathKind::LinearExact {
            let (e, v) = linear_quartic_moments(n, theta)?;
            let nf = n as f64;
            let o_mu = nf.sqrt() * (e - k.limit);
            let o_sigma = (nf * v).sqrt();
            report.push(name, n, "oracle_mean_u", o_mu, None, seed);
            report.push(name, n, "oracle_var_u", nf * v, None, seed);
            let ks_o = ks_to_normal(&us, o_mu, o_sigma)?;
            let ks_o_err = bootstrap_se(&us, BOOTSTRAP_RESAMPLES, SeedSpec::derive(seed, 4), |s| {
                ks_to_normal(s, o_mu, o_sigma).unwrap_or(f64::NAN)
            });
            report.push(name, n, "ks_oracle", ks_o, Some(ks_o_err), seed);
            let w1_o = wasserstein1_to_normal(&us, o_mu, o_sigma, W1_LEVELS)?;
            let w1_o_err = bootstrap_se(&us, BOOTSTRAP_RESAMPLES, SeedSpec::derive(seed, 5), |s| {
                wasserstein1_to_normal(s, o_mu, o_sigma, W1_LEVELS).unwrap_or(f64::NAN)
            });
            report.push(name, n, "w1_oracle", w1_o, Some(w1_o_err), seed);
        }
        report.stamp_timing(format!("N={n}"), first, n, start.elapsed().as_millis() as u64);
    }
    if w1_points.len() >= 3 {
        let f = fit_loglog_slope(&w1_points)?;
        report.push(name, 0, "w1_limit_slope", f.slope, Some(f.residual), config.master_seed);
    }
    report.note("w1_noise_floor: mean W1 of M exact draws from the limit law (its Monte Carlo floor)");
    report.note("oracle rows compare against the Gaussian with the exact finite-N mean and variance of U_N");
    Ok(report)
}

/// Mean and standard error of the W₁ distance between `m` exact draws from
/// `N(0, σ²)` and `N(0, σ²)` itself.
pub fn w1_noise_floor(m: usize, sigma: f64, seed: u64) -> Result<(f64, f64)> {
    let mut vals = Vec::with_capacity(FLOOR_REPEATS);
    for r in 0..FLOOR_REPEATS {
        let mut rng = SeedSpec::new(seed, r as u64).rng();
        let xs: Vec<f64> = (0..m)
            .map(|_| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        vals.push(wasserstein1_to_normal(&xs, 0.0, sigma, W1_LEVELS)?);
    }
    Ok(mean_se(&vals))
}
