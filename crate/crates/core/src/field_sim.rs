//! Finite-difference solver for the semilinear equation on `[−L, L]`.
//!
//! Time stepping is Crank-Nicolson in the diffusion and explicit in the
//! drift and the noise:
//!
//! ```text
//!     (I − (θ dt/4) Δ_dx) uⁿ⁺¹ = (I + (θ dt/4) Δ_dx) uⁿ + dt b(uⁿ) + √(dt/dx) ξⁿ
//! ```
//!
//! with `Δ_dx` the second-difference operator, Dirichlet zero boundaries and
//! `ξⁿ` i.i.d. standard normals per interior node (cell-averaged white
//! noise). The matrix on the left is constant, so its LU sweep coefficients
//! are computed once per solver.

use std::io::{Read, Write};

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_sim::{PathKind, PathSample, SeedSpec};
use crate::kernel::ModelParams;

/// Space-time grid of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGridSpec {
    /// Domain is `[−half_width, half_width]`.
    pub half_width: f64,
    /// Number of spatial cells `J`; nodes are `−L + k·dx`, `k = 0..=J`.
    pub cells: usize,
    /// Simulation steps per unit time.
    pub steps_per_unit: usize,
    /// Observation point; must coincide with an interior node.
    pub x_obs: f64,
    /// Number of observation intervals on `[0, 1]`.
    pub obs_n: usize,
}

impl FieldGridSpec {
    /// `L = 5`, `J = 1024`, 64 simulation steps per observation interval,
    /// observed at `x = 0`.
    pub fn default_for(obs_n: usize) -> Self {
        Self {
            half_width: 5.0,
            cells: 1024,
            steps_per_unit: 64 * obs_n,
            x_obs: 0.0,
            obs_n,
        }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps_per_unit as f64
    }

    pub fn steps_per_obs(&self) -> usize {
        self.steps_per_unit / self.obs_n
    }

    /// Node index of `x_obs`.
    pub fn obs_node(&self) -> usize {
        ((self.x_obs + self.half_width) / self.dx()).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(field, msg));
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return bad("field.half_width", format!("must be positive, got {}", self.half_width));
        }
        if self.cells < 2 {
            return bad("field.cells", format!("need at least 2 cells, got {}", self.cells));
        }
        if self.obs_n == 0 {
            return bad("field.obs_n", "must be >= 1".into());
        }
        if self.steps_per_unit == 0 || self.steps_per_unit % self.obs_n != 0 {
            return bad(
                "field.steps_per_unit",
                format!(
                    "must be a positive multiple of obs_n = {}, got {}",
                    self.obs_n, self.steps_per_unit
                ),
            );
        }
        let pos = (self.x_obs + self.half_width) / self.dx();
        let k = pos.round();
        if (pos - k).abs() > 1e-9 || k < 1.0 || k > (self.cells - 1) as f64 {
            return bad(
                "field.x_obs",
                format!("{} is not an interior grid node", self.x_obs),
            );
        }
        Ok(())
    }
}

/// Field values on the `J+1` nodes (boundary nodes stay zero) and the
/// number of steps taken.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub values: Vec<f64>,
    pub step: usize,
}

/// One solver instance; single-threaded.
#[derive(Debug, Clone)]
pub struct FieldSolver {
    spec: FieldGridSpec,
    params: ModelParams,
    state: FieldState,
    alpha: f64,
    dt: f64,
    noise_scale: f64,
    sweep_upper: Vec<f64>,
    sweep_inv: Vec<f64>,
    rhs: Vec<f64>,
}

impl FieldSolver {
    pub fn new(spec: &FieldGridSpec, params: &ModelParams) -> Result<Self> {
        spec.validate()?;
        let theta = params.theta();
        if spec.half_width < 4.0 * theta.sqrt() {
            log::warn!(
                "half width {} is below 4·√θ = {:.3}; boundary truncation may bias the solution",
                spec.half_width,
                4.0 * theta.sqrt()
            );
        }
        let dx = spec.dx();
        let dt = spec.dt();
        let alpha = theta * dt / (4.0 * dx * dx);
        let interior = spec.cells - 1;
        // LU sweep for the tridiagonal (−α, 1+2α, −α)
        let (sub, diag, sup) = (-alpha, 1.0 + 2.0 * alpha, -alpha);
        let mut sweep_upper = vec![0.0; interior];
        let mut sweep_inv = vec![0.0; interior];
        let mut prev = 0.0;
        for k in 0..interior {
            let denom = diag - sub * prev;
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::Tridiagonal(k));
            }
            sweep_inv[k] = 1.0 / denom;
            sweep_upper[k] = sup * sweep_inv[k];
            prev = sweep_upper[k];
        }
        Ok(Self {
            spec: *spec,
            params: *params,
            state: FieldState {
                values: vec![0.0; spec.cells + 1],
                step: 0,
            },
            alpha,
            dt,
            noise_scale: (dt / dx).sqrt(),
            sweep_upper,
            sweep_inv,
            rhs: vec![0.0; interior],
        })
    }

    pub fn spec(&self) -> &FieldGridSpec {
        &self.spec
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    /// Number of interior nodes (length of a noise vector).
    pub fn interior(&self) -> usize {
        self.spec.cells - 1
    }

    /// Node coordinates `−L + k·dx`.
    pub fn nodes(&self) -> Vec<f64> {
        let dx = self.spec.dx();
        (0..=self.spec.cells)
            .map(|k| -self.spec.half_width + k as f64 * dx)
            .collect()
    }

    /// Replaces the interior values by `f(x)`; boundaries stay zero.
    pub fn set_initial(&mut self, f: impl Fn(f64) -> f64) {
        let nodes = self.nodes();
        let last = self.spec.cells;
        for (k, v) in self.state.values.iter_mut().enumerate() {
            *v = if k == 0 || k == last { 0.0 } else { f(nodes[k]) };
        }
        self.state.step = 0;
    }

    pub fn value_at_obs(&self) -> f64 {
        self.state.values[self.spec.obs_node()]
    }

    /// `Σ u_k dx` over the nodes.
    pub fn mass(&self) -> f64 {
        self.state.values.iter().sum::<f64>() * self.spec.dx()
    }

    /// Advances one step. `noise` holds one standard normal per interior
    /// node; `None` switches the noise off.
    pub fn step(&mut self, noise: Option<&[f64]>) {
        let u = &mut self.state.values;
        let interior = self.spec.cells - 1;
        let a = self.alpha;
        let drift = self.params.drift();
        let with_drift = !drift.is_zero();
        for k in 0..interior {
            let c = u[k + 1];
            let mut r = (1.0 - 2.0 * a) * c + a * (u[k] + u[k + 2]);
            if with_drift {
                r += self.dt * drift.eval(c);
            }
            self.rhs[k] = r;
        }
        if let Some(xi) = noise {
            debug_assert_eq!(xi.len(), interior);
            for (r, z) in self.rhs.iter_mut().zip(xi) {
                *r += self.noise_scale * z;
            }
        }
        // forward sweep (sub-diagonal is −α)
        let mut prev = 0.0;
        for k in 0..interior {
            let d = (self.rhs[k] + a * prev) * self.sweep_inv[k];
            self.rhs[k] = d;
            prev = d;
        }
        // back substitution into the interior nodes
        let mut next = 0.0;
        for k in (0..interior).rev() {
            let x = self.rhs[k] - self.sweep_upper[k] * next;
            u[k + 1] = x;
            next = x;
        }
        self.state.step += 1;
    }
}

fn fill_normals(rng: &mut ChaCha8Rng, buf: &mut [f64]) {
    for v in buf.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

/// Runs the scheme from `u(0, ·) = 0` to `t = 1` and records `u(t_i, x_obs)`
/// at `t_i = i/obs_n`.
pub fn simulate_field(spec: &FieldGridSpec, params: &ModelParams, seed: SeedSpec) -> Result<PathSample> {
    run_field(spec, params, seed, None)
}

/// As [`simulate_field`], additionally dumping the whole field at every
/// observation instant (including `t = 0`) to `out` in the binary snapshot
/// format (see [`write_snapshot_header`]).
pub fn simulate_field_with_snapshots(
    spec: &FieldGridSpec,
    params: &ModelParams,
    seed: SeedSpec,
    out: &mut dyn Write,
) -> Result<PathSample> {
    run_field(spec, params, seed, Some(out))
}

fn run_field(
    spec: &FieldGridSpec,
    params: &ModelParams,
    seed: SeedSpec,
    mut snapshots: Option<&mut dyn Write>,
) -> Result<PathSample> {
    let mut solver = FieldSolver::new(spec, params)?;
    let mut rng = seed.rng();
    let mut xi = vec![0.0; solver.interior()];
    let per_obs = spec.steps_per_obs();
    let mut path = Vec::with_capacity(spec.obs_n + 1);
    path.push(solver.value_at_obs());
    if let Some(w) = snapshots.as_deref_mut() {
        write_snapshot_header(w, spec, params.theta())?;
        write_snapshot(w, solver.state())?;
    }
    for _ in 0..spec.obs_n {
        for _ in 0..per_obs {
            fill_normals(&mut rng, &mut xi);
            solver.step(Some(&xi));
        }
        path.push(solver.value_at_obs());
        if let Some(w) = snapshots.as_deref_mut() {
            write_snapshot(w, solver.state())?;
        }
    }
    PathSample::new(path, PathKind::SemilinearScheme)
}

/// Semilinear path `u` and linear path `u₀` driven by the same noise.
#[derive(Debug, Clone)]
pub struct CoupledPaths {
    pub u: PathSample,
    pub u0: PathSample,
}

/// Runs the semilinear and the linear scheme side by side, feeding both the
/// same noise vector at every step (noise is generated per step and never
/// stored).
pub fn simulate_coupled(spec: &FieldGridSpec, params: &ModelParams, seed: SeedSpec) -> Result<CoupledPaths> {
    if params.drift().is_zero() {
        let u = simulate_field(spec, params, seed)?;
        return Ok(CoupledPaths { u0: u.clone(), u });
    }
    let linear = ModelParams::linear(params.theta())?;
    let mut full = FieldSolver::new(spec, params)?;
    let mut lin = FieldSolver::new(spec, &linear)?;
    let mut rng = seed.rng();
    let mut xi = vec![0.0; full.interior()];
    let per_obs = spec.steps_per_obs();
    let mut u = vec![0.0; spec.obs_n + 1];
    let mut u0 = vec![0.0; spec.obs_n + 1];
    for i in 1..=spec.obs_n {
        for _ in 0..per_obs {
            fill_normals(&mut rng, &mut xi);
            full.step(Some(&xi));
            lin.step(Some(&xi));
        }
        u[i] = full.value_at_obs();
        u0[i] = lin.value_at_obs();
    }
    Ok(CoupledPaths {
        u: PathSample::new(u, PathKind::SemilinearScheme)?,
        u0: PathSample::new(u0, PathKind::SemilinearScheme)?,
    })
}

/// Remainder `X = u − u₀` of coupled paths.
pub fn decompose_path(u_path: &PathSample, u0_path: &PathSample) -> Result<PathSample> {
    if u_path.grid() != u0_path.grid() {
        return Err(Error::GridMismatch(format!(
            "N = {} vs N = {}",
            u_path.n(),
            u0_path.n()
        )));
    }
    let x = u_path
        .values()
        .iter()
        .zip(u0_path.values())
        .map(|(a, b)| a - b)
        .collect();
    PathSample::new(x, PathKind::SemilinearScheme)
}

/// Temporal Hölder exponent fitted from second moments of increments:
/// `E|Z(t + ℓ/N) − Z(t)|² ∝ (ℓ/N)^{2H}` over the given lags, averaged over
/// the supplied paths. Returns `H`.
pub fn temporal_holder_exponent(paths: &[&[f64]], lags: &[usize]) -> Result<f64> {
    if lags.len() < 2 || paths.is_empty() {
        return Err(Error::domain("need at least two lags and one path"));
    }
    let n = paths[0].len() - 1;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &lag in lags {
        if lag == 0 || lag > n {
            return Err(Error::domain(format!("lag {lag} out of range for N = {n}")));
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for p in paths {
            if p.len() != n + 1 {
                return Err(Error::LengthMismatch {
                    left: n + 1,
                    right: p.len(),
                });
            }
            for i in 0..=n - lag {
                total += (p[i + lag] - p[i]).powi(2);
                count += 1;
            }
        }
        let m2 = total / count as f64;
        if !(m2 > 0.0) {
            return Err(Error::domain("increments vanish; exponent undefined"));
        }
        xs.push((lag as f64 / n as f64).ln());
        ys.push(m2.ln());
    }
    let (slope, _, _) = crate::experiments::fit::least_squares(&xs, &ys);
    Ok(slope / 2.0)
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"HVSNAP01";

/// Header: magic `HVSNAP01`, then little-endian `half_width: f64`,
/// `cells: u64`, `steps_per_unit: u64`, `x_obs: f64`, `obs_n: u64`,
/// `theta: f64`, `nodes: u64`. Each record that follows is `step: u64`
/// followed by `nodes` values `f64`.
pub fn write_snapshot_header(w: &mut dyn Write, spec: &FieldGridSpec, theta: f64) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&spec.half_width.to_le_bytes())?;
    w.write_all(&(spec.cells as u64).to_le_bytes())?;
    w.write_all(&(spec.steps_per_unit as u64).to_le_bytes())?;
    w.write_all(&spec.x_obs.to_le_bytes())?;
    w.write_all(&(spec.obs_n as u64).to_le_bytes())?;
    w.write_all(&theta.to_le_bytes())?;
    w.write_all(&((spec.cells + 1) as u64).to_le_bytes())?;
    Ok(())
}

fn write_snapshot(w: &mut dyn Write, state: &FieldState) -> Result<()> {
    w.write_all(&(state.step as u64).to_le_bytes())?;
    for v in &state.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Parsed snapshot file.
#[derive(Debug, Clone)]
pub struct Snapshots {
    pub spec: FieldGridSpec,
    pub theta: f64,
    pub frames: Vec<FieldState>,
}

pub fn read_snapshots(r: &mut dyn Read) -> Result<Snapshots> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let bad = || Error::Serialization("truncated or malformed snapshot file".into());
    if bytes.len() < 64 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(bad());
    }
    let word = |k: usize| -> [u8; 8] { bytes[8 + 8 * k..16 + 8 * k].try_into().expect("8 bytes") };
    let spec = FieldGridSpec {
        half_width: f64::from_le_bytes(word(0)),
        cells: u64::from_le_bytes(word(1)) as usize,
        steps_per_unit: u64::from_le_bytes(word(2)) as usize,
        x_obs: f64::from_le_bytes(word(3)),
        obs_n: u64::from_le_bytes(word(4)) as usize,
    };
    let theta = f64::from_le_bytes(word(5));
    let nodes = u64::from_le_bytes(word(6)) as usize;
    let record = 8 * (nodes + 1);
    let body = &bytes[64..];
    if body.len() % record != 0 {
        return Err(bad());
    }
    let frames = body
        .chunks_exact(record)
        .map(|c| FieldState {
            step: u64::from_le_bytes(c[..8].try_into().expect("8 bytes")) as usize,
            values: c[8..]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect(),
        })
        .collect();
    Ok(Snapshots { spec, theta, frames })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Drift;

    fn small_spec(obs_n: usize) -> FieldGridSpec {
        FieldGridSpec {
            half_width: 5.0,
            cells: 128,
            steps_per_unit: 16 * obs_n,
            x_obs: 0.0,
            obs_n,
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = small_spec(8);
        assert!(s.validate().is_ok());
        assert_eq!(s.obs_node(), 64);
        s.steps_per_unit = 100;
        assert!(matches!(s.validate(), Err(Error::Config { field, .. }) if field == "field.steps_per_unit"));
        let mut s = small_spec(8);
        s.x_obs = 0.01;
        assert!(s.validate().is_err());
        s.x_obs = 5.0;
        assert!(s.validate().is_err());
        let d = FieldGridSpec::default_for(512);
        assert_eq!(d.steps_per_unit, 32768);
        assert!(d.validate().is_ok());
    }

    #[test]
    fn zero_dynamics_stay_zero() {
        let p = ModelParams::linear(1.0).unwrap();
        let mut s = FieldSolver::new(&small_spec(4), &p).unwrap();
        for _ in 0..200 {
            s.step(None);
        }
        assert!(s.state().values.iter().all(|&v| v == 0.0));
        assert_eq!(s.state().step, 200);
    }

    #[test]
    fn boundaries_stay_zero_under_noise() {
        let p = ModelParams::new(1.0, Drift::Cosine).unwrap();
        let path = simulate_field(&small_spec(8), &p, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(path.values().len(), 9);
        let mut s = FieldSolver::new(&small_spec(8), &p).unwrap();
        let xi = vec![1.0; s.interior()];
        for _ in 0..50 {
            s.step(Some(&xi));
        }
        let v = &s.state().values;
        assert_eq!(v[0], 0.0);
        assert_eq!(*v.last().unwrap(), 0.0);
    }

    // b(u) = u without noise: total mass grows like e^t while the bump
    // stays away from the boundary. Compared against a run at twice the
    // space and time resolution.
    #[test]
    fn linear_drift_mass_growth() {
        let p = ModelParams::new(1.0, Drift::Linear { c: 1.0 }).unwrap();
        let run = |cells: usize, steps: usize| {
            let spec = FieldGridSpec {
                half_width: 5.0,
                cells,
                steps_per_unit: steps,
                x_obs: 0.0,
                obs_n: 1,
            };
            let mut s = FieldSolver::new(&spec, &p).unwrap();
            s.set_initial(|x| (-x * x / 0.02).exp());
            let m0 = s.mass();
            for _ in 0..steps {
                s.step(None);
            }
            s.mass() / m0
        };
        let coarse = run(256, 400);
        let fine = run(512, 800);
        let e = std::f64::consts::E;
        assert!((fine - e).abs() / e < 2e-3, "fine ratio {fine}");
        assert!((coarse - fine).abs() / fine < 2e-3, "{coarse} vs {fine}");
    }

    #[test]
    fn equal_seeds_reproduce_scheme_paths() {
        let p = ModelParams::new(1.0, Drift::BoundedRational).unwrap();
        let a = simulate_field(&small_spec(8), &p, SeedSpec::new(3, 1)).unwrap();
        let b = simulate_field(&small_spec(8), &p, SeedSpec::new(3, 1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.kind(), PathKind::SemilinearScheme);
    }

    #[test]
    fn coupled_linear_leg_equals_plain_linear_run() {
        let spec = small_spec(8);
        let p = ModelParams::new(1.0, Drift::Cosine).unwrap();
        let seed = SeedSpec::new(9, 2);
        let c = simulate_coupled(&spec, &p, seed).unwrap();
        let lin = simulate_field(&spec, &ModelParams::linear(1.0).unwrap(), seed).unwrap();
        assert_eq!(c.u0, lin);
        let drift_only = simulate_field(&spec, &p, seed).unwrap();
        assert_eq!(c.u, drift_only);
    }

    #[test]
    fn decomposition_without_drift_vanishes() {
        let spec = small_spec(8);
        let p = ModelParams::linear(1.0).unwrap();
        let c = simulate_coupled(&spec, &p, SeedSpec::new(4, 0)).unwrap();
        let x = decompose_path(&c.u, &c.u0).unwrap();
        assert!(x.values().iter().all(|&v| v == 0.0));
        let other = simulate_field(&small_spec(4), &p, SeedSpec::new(4, 0)).unwrap();
        assert!(matches!(decompose_path(&c.u, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn stable_for_all_drifts() {
        for d in [
            Drift::Zero,
            Drift::Linear { c: 2.0 },
            Drift::Cosine,
            Drift::BoundedRational,
        ] {
            let p = ModelParams::new(1.0, d).unwrap();
            let spec = FieldGridSpec {
                cells: 256,
                ..FieldGridSpec::default_for(16)
            };
            let path = simulate_field(&spec, &p, SeedSpec::new(8, 0)).unwrap();
            assert!(path.values().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let spec = small_spec(4);
        let p = ModelParams::new(0.5, Drift::Cosine).unwrap();
        let mut buf = Vec::new();
        let path = simulate_field_with_snapshots(&spec, &p, SeedSpec::new(2, 2), &mut buf).unwrap();
        let snaps = read_snapshots(&mut buf.as_slice()).unwrap();
        assert_eq!(snaps.spec, spec);
        assert_eq!(snaps.theta, 0.5);
        assert_eq!(snaps.frames.len(), 5);
        for (i, f) in snaps.frames.iter().enumerate() {
            assert_eq!(f.step, i * spec.steps_per_obs());
            assert_eq!(f.values[spec.obs_node()], path.values()[i]);
        }
        assert!(read_snapshots(&mut &buf[..70]).is_err());
    }

    #[test]
    fn holder_exponent_of_brownian_like_paths() {
        // random walk: exponent 1/2
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let paths: Vec<Vec<f64>> = (0..200)
            .map(|_| {
                let mut v = vec![0.0];
                for _ in 0..256 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v.push(v.last().unwrap() + z);
                }
                v
            })
            .collect();
        let refs: Vec<&[f64]> = paths.iter().map(|p| p.as_slice()).collect();
        let h = temporal_holder_exponent(&refs, &[1, 2, 4, 8, 16]).unwrap();
        assert!((h - 0.5).abs() < 0.03, "{h}");
    }
}
