//! Exact-in-law simulation of the linear solution at a fixed point.
//!
//! The vector `(u₀(t_i, x))_{i=1..N}` is centered Gaussian with covariance
//! `cov_u0(t_i, t_j)`; a path is `L z` for the Cholesky factor `L` and a
//! vector `z` of standard normals drawn from the replicate's own stream.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{check_theta, cov_u0, TimeGrid};
use crate::linalg::{cholesky_with_ladder, LowerFactor, SymMatrix};
use crate::parallel;

/// Default upper bound on `N` for covariance factorization.
pub const DEFAULT_MAX_N: usize = 8192;

/// Random stream selector.
///
/// The stream for `(master_seed, replicate)` is ChaCha8 keyed by
/// `master_seed` (through `seed_from_u64`) with its 64-bit stream id set to
/// `replicate`. Distinct replicates therefore never share keystream, and a
/// replicate's draws do not depend on which thread produced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replicate: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replicate: u64) -> Self {
        Self {
            master_seed,
            replicate,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replicate);
        rng
    }

    /// Sub-master seed for a labelled family of replicates (for example one
    /// per `N` in an experiment).
    pub fn derive(master_seed: u64, label: u64) -> u64 {
        splitmix64(master_seed ^ splitmix64(label.wrapping_add(0xA076_1D64_78BD_642F)))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    LinearExact,
    SemilinearScheme,
}

/// Observations `(u(t_i, x))_{i=0..N}` at a fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    values: Vec<f64>,
    grid: TimeGrid,
    kind: PathKind,
}

impl PathSample {
    /// `values[0]` must be zero (vanishing initial condition) and all values
    /// finite; at least two values are required.
    pub fn new(values: Vec<f64>, kind: PathKind) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::domain("a path needs at least two observations"));
        }
        if values[0] != 0.0 {
            return Err(Error::domain(format!(
                "path must start at 0 (vanishing initial condition), got {}",
                values[0]
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite path value at index {k}")));
        }
        let grid = TimeGrid::new(values.len() - 1)?;
        Ok(Self { values, grid, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    /// `Δ_i = v[i+1] − v[i]`, `i = 0..N−1`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Covariance of `(u₀(t_i, x))_{i=1..N}` with its Cholesky factor.
///
/// Entries are recomputed from the closed form on demand; only the factor
/// is stored.
#[derive(Debug, Clone)]
pub struct TemporalCovariance {
    n: usize,
    theta: f64,
    factor: LowerFactor,
    jitter: f64,
}

impl TemporalCovariance {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Jitter added to the diagonal to obtain the factor.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn factor(&self) -> &LowerFactor {
        &self.factor
    }

    /// `C[i][j] = cov_u0(t_i, t_j)` for `1 ≤ i, j ≤ N`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        assert!((1..=self.n).contains(&i) && (1..=self.n).contains(&j));
        let n = self.n as f64;
        cov_u0(i as f64 / n, j as f64 / n, self.theta).expect("validated at construction")
    }

    /// Materializes the `N×N` matrix (index 0 corresponds to `t_1`).
    pub fn matrix(&self) -> SymMatrix {
        covariance_matrix(self.n, self.theta)
    }
}

fn covariance_matrix(n: usize, theta: f64) -> SymMatrix {
    let root: Vec<f64> = (0..=2 * n).map(|k| (k as f64).sqrt()).collect();
    let scale = 1.0 / (2.0 * PI * theta * n as f64).sqrt();
    // t_a = (a+1)/N
    SymMatrix::from_fn(n, |a, b| scale * (root[a + b + 2] - root[a.abs_diff(b)]))
}

/// Builds and factorizes the temporal covariance, `1 ≤ N ≤` [`DEFAULT_MAX_N`].
pub fn build_temporal_covariance(n: usize, theta: f64) -> Result<TemporalCovariance> {
    build_temporal_covariance_capped(n, theta, DEFAULT_MAX_N)
}

/// As [`build_temporal_covariance`] with an explicit cap on `N`.
pub fn build_temporal_covariance_capped(
    n: usize,
    theta: f64,
    max_n: usize,
) -> Result<TemporalCovariance> {
    check_theta(theta)?;
    if n == 0 {
        return Err(Error::domain("N must be >= 1"));
    }
    if n > max_n {
        return Err(Error::domain(format!(
            "N = {n} exceeds the factorization cap {max_n}; raise the cap explicitly"
        )));
    }
    let matrix = covariance_matrix(n, theta);
    let (factor, jitter) = cholesky_with_ladder(&matrix)?;
    if jitter > 0.0 {
        log::debug!("temporal covariance N={n} theta={theta} factorized with jitter {jitter:e}");
    }
    Ok(TemporalCovariance {
        n,
        theta,
        factor,
        jitter,
    })
}

type CovCache = Mutex<HashMap<(usize, u64), Arc<TemporalCovariance>>>;

/// Process-wide cache keyed by `(N, θ)`.
pub fn cached_temporal_covariance(n: usize, theta: f64) -> Result<Arc<TemporalCovariance>> {
    cached_temporal_covariance_capped(n, theta, DEFAULT_MAX_N)
}

pub fn cached_temporal_covariance_capped(
    n: usize,
    theta: f64,
    max_n: usize,
) -> Result<Arc<TemporalCovariance>> {
    static CACHE: OnceLock<CovCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (n, theta.to_bits());
    if let Some(c) = cache.lock().expect("cache poisoned").get(&key) {
        return Ok(Arc::clone(c));
    }
    // built outside the lock; a concurrent duplicate build is harmless
    let cov = Arc::new(build_temporal_covariance_capped(n, theta, max_n)?);
    let mut guard = cache.lock().expect("cache poisoned");
    Ok(Arc::clone(guard.entry(key).or_insert(cov)))
}

/// Writes one exact path into `out` (length `N+1`, `out[0] = 0`), using `z`
/// as scratch for the normals.
pub fn sample_path_into(cov: &TemporalCovariance, seed: SeedSpec, z: &mut [f64], out: &mut [f64]) {
    let mut rng = seed.rng();
    for v in z.iter_mut() {
        *v = StandardNormal.sample(&mut rng);
    }
    out[0] = 0.0;
    cov.factor.mul_vec(z, &mut out[1..]);
}

/// Exact sample of `(u₀(t_i, x))_{i=0..N}`.
pub fn sample_path(cov: &TemporalCovariance, seed: SeedSpec) -> PathSample {
    let mut z = vec![0.0; cov.n];
    let mut out = vec![0.0; cov.n + 1];
    sample_path_into(cov, seed, &mut z, &mut out);
    PathSample {
        values: out,
        grid: TimeGrid::new(cov.n).expect("n >= 1"),
        kind: PathKind::LinearExact,
    }
}

/// Monte Carlo estimates of `E[Δ_i²]` and `E[Δ_i⁴]` per increment, with
/// standard errors.
#[derive(Debug, Clone)]
pub struct IncrementMoments {
    pub replicates: usize,
    pub second: Vec<f64>,
    pub second_se: Vec<f64>,
    pub fourth: Vec<f64>,
    pub fourth_se: Vec<f64>,
}

const MOMENT_CHUNK: usize = 512;

/// Replicates `0..m` of stream family `master_seed`.
pub fn sample_increment_moments(
    cov: &TemporalCovariance,
    m: usize,
    master_seed: u64,
) -> Result<IncrementMoments> {
    if m < 100 {
        return Err(Error::domain(format!("need at least 100 replicates, got {m}")));
    }
    let n = cov.n;
    let chunks = m.div_ceil(MOMENT_CHUNK);
    // per chunk: sums of d², d⁴, d⁸ for each increment
    let partial = parallel::map_replicates(chunks, None, |c| {
        let mut acc = vec![[0.0f64; 3]; n];
        let mut z = vec![0.0; n];
        let mut path = vec![0.0; n + 1];
        let lo = c as usize * MOMENT_CHUNK;
        let hi = (lo + MOMENT_CHUNK).min(m);
        for r in lo..hi {
            sample_path_into(cov, SeedSpec::new(master_seed, r as u64), &mut z, &mut path);
            for (i, a) in acc.iter_mut().enumerate() {
                let d2 = (path[i + 1] - path[i]).powi(2);
                let d4 = d2 * d2;
                a[0] += d2;
                a[1] += d4;
                a[2] += d4 * d4;
            }
        }
        acc
    });
    let mut total = vec![[0.0f64; 3]; n];
    for chunk in &partial {
        for (t, a) in total.iter_mut().zip(chunk) {
            for k in 0..3 {
                t[k] += a[k];
            }
        }
    }
    let mf = m as f64;
    let mut out = IncrementMoments {
        replicates: m,
        second: Vec::with_capacity(n),
        second_se: Vec::with_capacity(n),
        fourth: Vec::with_capacity(n),
        fourth_se: Vec::with_capacity(n),
    };
    for t in &total {
        let m2 = t[0] / mf;
        let m4 = t[1] / mf;
        let m8 = t[2] / mf;
        out.second.push(m2);
        out.second_se.push(((m4 - m2 * m2).max(0.0) / (mf - 1.0)).sqrt());
        out.fourth.push(m4);
        out.fourth_se.push(((m8 - m4 * m4).max(0.0) / (mf - 1.0)).sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_case() {
        let c = build_temporal_covariance(1, 1.0).unwrap();
        assert!((c.entry(1, 1) - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((c.factor().get(0, 0) - PI.powf(-0.25)).abs() < 1e-15);
        assert_eq!(c.jitter(), 0.0);
    }

    #[test]
    fn two_point_entry() {
        let c = build_temporal_covariance(2, 1.0).unwrap();
        let expected = ((1.5f64).sqrt() - (0.5f64).sqrt()) / (2.0 * PI).sqrt();
        assert!((c.entry(1, 2) - expected).abs() < 1e-15);
        assert!((c.entry(1, 2) - 0.206_507_7).abs() < 1e-7);
        assert!((c.matrix().get(0, 1) - expected).abs() < 1e-15);
    }

    #[test]
    fn matrix_is_exactly_symmetric_and_reproduced_by_factor() {
        for &n in &[3usize, 17, 64] {
            let c = build_temporal_covariance(n, 0.7).unwrap();
            let m = c.matrix();
            assert!(m.is_symmetric());
            for i in 0..n {
                assert!(c.factor().get(i, i) > 0.0);
                for j in 0..n {
                    assert!((c.factor().product_entry(i, j) - m.get(i, j)).abs() < 1e-9);
                    assert!((m.get(i, j) - c.entry(i + 1, j + 1)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn cap_and_domain_errors() {
        assert!(build_temporal_covariance(0, 1.0).is_err());
        assert!(build_temporal_covariance(4, -1.0).is_err());
        assert!(build_temporal_covariance_capped(32, 1.0, 16).is_err());
    }

    #[test]
    fn equal_seeds_give_identical_paths() {
        let c = build_temporal_covariance(32, 1.0).unwrap();
        let a = sample_path(&c, SeedSpec::new(7, 3));
        let b = sample_path(&c, SeedSpec::new(7, 3));
        let other = sample_path(&c, SeedSpec::new(7, 4));
        assert_eq!(a, b);
        assert_ne!(a, other);
        assert_eq!(a.values()[0], 0.0);
        assert_eq!(a.values().len(), 33);
        assert_eq!(a.kind(), PathKind::LinearExact);
    }

    #[test]
    fn path_sample_invariants() {
        assert!(PathSample::new(vec![0.0], PathKind::LinearExact).is_err());
        assert!(PathSample::new(vec![1.0, 0.0], PathKind::LinearExact).is_err());
        assert!(PathSample::new(vec![0.0, f64::NAN], PathKind::LinearExact).is_err());
        let p = PathSample::new(vec![0.0, 1.0, 0.0], PathKind::SemilinearScheme).unwrap();
        assert_eq!(p.n(), 2);
        assert_eq!(p.increments(), vec![1.0, -1.0]);
    }

    #[test]
    fn cache_returns_shared_instance() {
        let a = cached_temporal_covariance(24, 1.25).unwrap();
        let b = cached_temporal_covariance(24, 1.25).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn increment_moments_need_enough_replicates() {
        let c = build_temporal_covariance(4, 1.0).unwrap();
        assert!(sample_increment_moments(&c, 99, 1).is_err());
    }
}
