//! Declarative Monte Carlo experiments writing long-format reports.
//!
//! Every replicate `r` of the block for a given `N` draws from the stream
//! `SeedSpec::new(stream_seed(master_seed, N), r)`, and results are
//! collected in replicate order, so reports do not depend on the number of
//! worker threads.

pub mod clt;
pub mod config;
pub mod estimator;
pub mod fit;
pub mod independence;
pub mod moments;
pub mod report;
pub mod semilinear;
pub mod source;

pub use clt::{run_clt_experiment, run_clt_experiment_with};
pub use config::{
    selection_indices, selection_size, ExperimentConfig, ExperimentKind, FieldConfig, Placement,
    RunOptions, SelectionConfig, DEFAULT_MASTER_SEED, SCHEMA_VERSION,
};
pub use estimator::{run_estimator_experiment, run_estimator_experiment_with};
pub use fit::{fit_loglog_slope, least_squares, LogLogFit};
pub use independence::{run_independence_experiment, run_independence_experiment_with};
pub use moments::run_moments_experiment;
pub use report::{ExperimentReport, ReportRow};
pub use semilinear::run_semilinear_experiment;
pub use source::{default_source, ExactSource, PathSource, SchemeSource};

use crate::error::Result;

/// Desk-scale budget per experiment, in seconds of wall time on 8 cores.
pub const BUDGET_SECONDS: f64 = 600.0;

/// Runs the experiment named by `config.kind`.
pub fn run_experiment(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    let est = config.estimated_seconds() / 8.0;
    if est > BUDGET_SECONDS {
        log::warn!(
            "predicted run time ~{:.0} s on 8 cores exceeds the {:.0} s budget",
            est,
            BUDGET_SECONDS
        );
    }
    let mut report = match config.kind {
        ExperimentKind::Moments => run_moments_experiment(config, opts),
        ExperimentKind::Clt | ExperimentKind::Rate => run_clt_experiment(config, opts),
        ExperimentKind::Estimator => run_estimator_experiment(config, opts),
        ExperimentKind::Independence => run_independence_experiment(config, opts),
        ExperimentKind::Semilinear => run_semilinear_experiment(config, opts),
    }?;
    if est > BUDGET_SECONDS {
        report.note(format!("predicted run time ~{est:.0} s on 8 cores exceeded the budget"));
    }
    Ok(report)
}
