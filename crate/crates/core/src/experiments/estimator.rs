use std::time::Instant;

use crate::error::Result;
use crate::stats::{ecdf_sorted, mean_se, std_normal_cdf, variance_se};
use crate::variation::EstimateRecord;
use crate::wick::asymptotic_constants;

use super::config::{ExperimentConfig, RunOptions};
use super::fit::fit_loglog_slope;
use super::report::ExperimentReport;
use super::source::{default_source, map_paths, stream_seed, PathSource};

/// Points where the CDF of `θ̄` is compared to its Gaussian limit.
pub const CDF_POINTS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

pub fn cdf_gap_stat(t: f64) -> String {
    format!("cdf_gap_t{t:+}")
}

pub fn run_estimator_experiment(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    let source = default_source(config)?;
    run_estimator_experiment_with(config, source.as_ref(), opts)
}

/// Bias of `θ̂`, variance of `θ̄ = √N(θ̂ − θ)` against `32θ²/3`, and CDF gaps
/// `|P(θ̄ ≤ t) − Φ(t/σ₁)|` per `N`, with log-log slopes of the gaps.
pub fn run_estimator_experiment_with(
    config: &ExperimentConfig,
    source: &dyn PathSource,
    opts: RunOptions,
) -> Result<ExperimentReport> {
    config.validate()?;
    let name = config.kind.name();
    let theta = config.theta;
    let k = asymptotic_constants(theta)?;
    let sigma1 = k.sigma1_theta_sq.sqrt();
    let m = config.replicates;
    let mf = m as f64;
    let mut report = ExperimentReport::new(config);
    let mut gap_points: Vec<Vec<(f64, f64)>> = vec![Vec::new(); CDF_POINTS.len()];
    let mut max_gap_points = Vec::new();
    for &n in &config.n_list {
        let start = Instant::now();
        let first = report.rows.len();
        let seed = stream_seed(config.master_seed, n as u64);
        if let Some(j) = source.prepare(n)? {
            report.metadata.jitter.insert(n, j);
        }
        let recs = map_paths(source, n, m, seed, opts.workers, |p| {
            let r = EstimateRecord::from_path(p, theta, None)?;
            Ok((r.theta_hat, r.theta_bar))
        })?;
        let hats: Vec<f64> = recs.iter().map(|r| r.0).collect();
        let mut bars: Vec<f64> = recs.iter().map(|r| r.1).collect();
        let (mean_hat, hat_err) = mean_se(&hats);
        report.push(name, n, "mean_theta_hat", mean_hat, Some(hat_err), seed);
        report.push(name, n, "bias_theta_hat", mean_hat - theta, Some(hat_err), seed);
        let (var_bar, var_err) = variance_se(&bars);
        report.push(name, n, "var_theta_bar", var_bar, Some(var_err), seed);
        report.push(
            name,
            n,
            "var_theta_bar_ratio",
            var_bar / k.sigma1_theta_sq,
            Some(var_err / k.sigma1_theta_sq),
            seed,
        );
        bars.sort_by(f64::total_cmp);
        let quarter = (n as f64).powf(0.25);
        let mut max_gap: f64 = 0.0;
        for (slot, &t) in CDF_POINTS.iter().enumerate() {
            let f = ecdf_sorted(&bars, t);
            let phi = std_normal_cdf(t / sigma1);
            let gap = (f - phi).abs();
            let err = (f * (1.0 - f) / mf).sqrt();
            report.push(name, n, cdf_gap_stat(t), gap, Some(err), seed);
            report.push(name, n, format!("cdf_gap_scaled_t{t:+}"), gap * quarter, Some(err * quarter), seed);
            gap_points[slot].push((n as f64, gap));
            max_gap = max_gap.max(gap);
        }
        report.push(name, n, "max_cdf_gap", max_gap, Some((0.25 / mf).sqrt()), seed);
        max_gap_points.push((n as f64, max_gap));
        report.stamp_timing(format!("N={n}"), first, n, start.elapsed().as_millis() as u64);
    }
    if config.n_list.len() >= 3 {
        for (slot, &t) in CDF_POINTS.iter().enumerate() {
            match fit_loglog_slope(&gap_points[slot]) {
                Ok(f) => report.push(name, 0, format!("cdf_gap_slope_t{t:+}"), f.slope, Some(f.residual), config.master_seed),
                Err(_) => report.note(format!("cdf gap at t = {t} vanished for some N; no slope")),
            }
        }
        let f = fit_loglog_slope(&max_gap_points)?;
        report.push(name, 0, "max_cdf_gap_slope", f.slope, Some(f.residual), config.master_seed);
    }
    report.note("cdf_gap_scaled rows are gap·N^{1/4}, the fitted constant c(t) of the N^{-1/4} bound");
    Ok(report)
}
