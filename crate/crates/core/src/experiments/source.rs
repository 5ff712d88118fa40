//! Where experiment paths come from.

use crate::error::Result;
use crate::field_sim::simulate_field;
use crate::gaussian_sim::{cached_temporal_covariance_capped, sample_path, PathKind, PathSample, SeedSpec};
use crate::kernel::ModelParams;
use crate::parallel::try_map_replicates;

use super::config::{ExperimentConfig, FieldConfig};

/// A family of observed paths indexed by `(N, seed)`.
pub trait PathSource: Sync {
    fn kind(&self) -> PathKind;

    /// Called once per `N` before sampling; returns the factorization
    /// jitter when there is one.
    fn prepare(&self, _n: usize) -> Result<Option<f64>> {
        Ok(None)
    }

    fn sample(&self, n: usize, seed: SeedSpec) -> Result<PathSample>;
}

/// Exact Gaussian paths of the linear solution.
#[derive(Debug, Clone, Copy)]
pub struct ExactSource {
    pub theta: f64,
    pub max_n: usize,
}

impl PathSource for ExactSource {
    fn kind(&self) -> PathKind {
        PathKind::LinearExact
    }

    fn prepare(&self, n: usize) -> Result<Option<f64>> {
        Ok(Some(cached_temporal_covariance_capped(n, self.theta, self.max_n)?.jitter()))
    }

    fn sample(&self, n: usize, seed: SeedSpec) -> Result<PathSample> {
        let cov = cached_temporal_covariance_capped(n, self.theta, self.max_n)?;
        Ok(sample_path(&cov, seed))
    }
}

/// Finite-difference scheme observed at `x_obs`.
#[derive(Debug, Clone, Copy)]
pub struct SchemeSource {
    pub params: ModelParams,
    pub field: FieldConfig,
}

impl PathSource for SchemeSource {
    fn kind(&self) -> PathKind {
        PathKind::SemilinearScheme
    }

    fn prepare(&self, n: usize) -> Result<Option<f64>> {
        self.field.grid_for(n).validate()?;
        Ok(None)
    }

    fn sample(&self, n: usize, seed: SeedSpec) -> Result<PathSample> {
        simulate_field(&self.field.grid_for(n), &self.params, seed)
    }
}

/// Exact paths for zero drift (unless the kind is `semilinear`), the scheme
/// otherwise.
pub fn default_source(config: &ExperimentConfig) -> Result<Box<dyn PathSource>> {
    let params = config.params()?;
    Ok(if config.uses_scheme() {
        Box::new(SchemeSource {
            params,
            field: config.field,
        })
    } else {
        Box::new(ExactSource {
            theta: config.theta,
            max_n: config.max_n,
        })
    })
}

/// Stream seed for one labelled block of replicates (usually one `N`).
pub fn stream_seed(master_seed: u64, label: u64) -> u64 {
    SeedSpec::derive(master_seed, label)
}

/// Applies `f` to `m` paths drawn on stream `seed`, in replicate order.
pub fn map_paths<T, F>(
    source: &dyn PathSource,
    n: usize,
    m: usize,
    seed: u64,
    workers: Option<usize>,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&PathSample) -> Result<T> + Sync + Send,
{
    try_map_replicates(m, workers, |r| {
        let path = source.sample(n, SeedSpec::new(seed, r))?;
        f(&path)
    })
}
