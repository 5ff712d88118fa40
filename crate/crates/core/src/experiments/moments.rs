use std::time::Instant;

use crate::error::{Error, Result};
use crate::stats::{mean_se, variance_se};
use crate::variation::quartic_variation;
use crate::wick::{asymptotic_constants, linear_quartic_moments};

use super::config::{ExperimentConfig, RunOptions};
use super::fit::fit_loglog_slope;
use super::report::ExperimentReport;
use super::source::{map_paths, stream_seed, ExactSource, PathSource};

/// Exact `E[V_N]`, `Var[V_N]` per `N` with their gaps to the limits and
/// log-log slopes of the gaps. With `replicates ≥ 2` each `N` also gets a
/// Monte Carlo check of the oracle on exact paths.
pub fn run_moments_experiment(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    if !config.drift.is_zero() {
        return Err(Error::config("drift", "moments experiment needs the linear model (zero drift)"));
    }
    let name = config.kind.name();
    let theta = config.theta;
    let k = asymptotic_constants(theta)?;
    let source = ExactSource {
        theta,
        max_n: config.max_n,
    };
    let mut report = ExperimentReport::new(config);
    let seed0 = config.master_seed;
    let mut mean_gaps = Vec::new();
    let mut var_gaps = Vec::new();
    for &n in &config.n_list {
        let start = Instant::now();
        let first = report.rows.len();
        let nf = n as f64;
        let (e, v) = linear_quartic_moments(n, theta)?;
        report.push(name, n, "mean_v", e, None, seed0);
        report.push(name, n, "var_v", v, None, seed0);
        report.push(name, n, "n_var_v", nf * v, None, seed0);
        report.push(name, n, "mean_gap", e - k.limit, None, seed0);
        report.push(name, n, "n_var_gap", nf * v - k.sigma_theta_sq, None, seed0);
        report.push(name, n, "n_var_rel_gap", (nf * v - k.sigma_theta_sq) / k.sigma_theta_sq, None, seed0);
        mean_gaps.push((nf, (e - k.limit).abs()));
        var_gaps.push((nf, (nf * v - k.sigma_theta_sq).abs()));
        if config.replicates >= 2 {
            let seed = stream_seed(config.master_seed, n as u64);
            if let Some(j) = source.prepare(n)? {
                report.metadata.jitter.insert(n, j);
            }
            let vs = map_paths(&source, n, config.replicates, seed, opts.workers, |p| {
                Ok(quartic_variation(p))
            })?;
            let (mc_mean, mean_err) = mean_se(&vs);
            let (mc_var, var_err) = variance_se(&vs);
            report.push(name, n, "mc_mean_v", mc_mean, Some(mean_err), seed);
            report.push(name, n, "mc_var_v", mc_var, Some(var_err), seed);
            report.push(name, n, "mc_var_z", (mc_var - v) / var_err, None, seed);
        }
        report.stamp_timing(format!("N={n}"), first, n, start.elapsed().as_millis() as u64);
    }
    if config.n_list.len() >= 3 {
        let f = fit_loglog_slope(&mean_gaps)?;
        report.push(name, 0, "mean_gap_slope", f.slope, Some(f.residual), seed0);
        let f = fit_loglog_slope(&var_gaps)?;
        report.push(name, 0, "n_var_gap_slope", f.slope, Some(f.residual), seed0);
    } else {
        report.note("fewer than 3 values of N: no slopes fitted");
    }
    report.push(name, 0, "limit", k.limit, None, seed0);
    report.push(name, 0, "sigma_theta_sq", k.sigma_theta_sq, None, seed0);
    report.note("slope rows carry the rms log-residual of the fit in the stderr column");
    Ok(report)
}
