//! Experiment configuration (TOML, schema version 1).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_sim::FieldGridSpec;
use crate::gaussian_sim::DEFAULT_MAX_N;
use crate::kernel::{Drift, ModelParams};

pub const SCHEMA_VERSION: u32 = 1;

/// Seed used when a config does not set one.
pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Moments,
    Clt,
    Rate,
    Estimator,
    Independence,
    Semilinear,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Moments => "moments",
            ExperimentKind::Clt => "clt",
            ExperimentKind::Rate => "rate",
            ExperimentKind::Estimator => "estimator",
            ExperimentKind::Independence => "independence",
            ExperimentKind::Semilinear => "semilinear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    #[default]
    EvenlySpaced,
    FirstM,
}

/// Rule for the observation set `J_N ⊂ {1..N}` with `card J_N = ⌊N^γ⌋`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// When non-empty, replaces `gamma` and is swept in order.
    #[serde(default)]
    pub gamma_list: Vec<f64>,
    #[serde(default)]
    pub placement: Placement,
}

fn default_gamma() -> f64 {
    0.25
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            gamma: default_gamma(),
            gamma_list: Vec::new(),
            placement: Placement::default(),
        }
    }
}

impl SelectionConfig {
    pub fn gammas(&self) -> Vec<f64> {
        if self.gamma_list.is_empty() {
            vec![self.gamma]
        } else {
            self.gamma_list.clone()
        }
    }
}

/// `m(N) = ⌊N^γ⌋`.
pub fn selection_size(n: usize, gamma: f64) -> usize {
    // guard against N^γ landing just below an integer
    ((n as f64).powf(gamma) + 1e-9).floor() as usize
}

/// The indices `J_N` (1-based observation times `q/N`).
pub fn selection_indices(n: usize, gamma: f64, placement: Placement) -> Result<Vec<usize>> {
    let m = selection_size(n, gamma).min(n);
    if m == 0 {
        return Err(Error::domain(format!("m(N) = 0 for N = {n}, gamma = {gamma}")));
    }
    Ok(match placement {
        Placement::FirstM => (1..=m).collect(),
        Placement::EvenlySpaced => (1..=m).map(|k| (k * n).div_ceil(m)).collect(),
    })
}

/// Spatial grid of the scheme; the time step is `1/(steps_per_obs·N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_steps_per_obs")]
    pub steps_per_obs: usize,
    #[serde(default)]
    pub x_obs: f64,
}

fn default_half_width() -> f64 {
    5.0
}
fn default_cells() -> usize {
    1024
}
fn default_steps_per_obs() -> usize {
    64
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            half_width: default_half_width(),
            cells: default_cells(),
            steps_per_obs: default_steps_per_obs(),
            x_obs: 0.0,
        }
    }
}

impl FieldConfig {
    pub fn grid_for(&self, obs_n: usize) -> FieldGridSpec {
        FieldGridSpec {
            half_width: self.half_width,
            cells: self.cells,
            steps_per_unit: self.steps_per_obs * obs_n,
            x_obs: self.x_obs,
            obs_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub kind: ExperimentKind,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub drift: Drift,
    pub n_list: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Fill the `wall_ms` CSV column. Off by default so reruns stay
    /// byte-identical.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}
fn default_theta() -> f64 {
    1.0
}
fn default_replicates() -> usize {
    1000
}
fn default_seed() -> u64 {
    DEFAULT_MASTER_SEED
}
fn default_max_n() -> usize {
    DEFAULT_MAX_N
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(kind: ExperimentKind, n_list: Vec<usize>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind,
            theta: default_theta(),
            drift: Drift::Zero,
            n_list,
            replicates: default_replicates(),
            master_seed: default_seed(),
            selection: SelectionConfig::default(),
            field: FieldConfig::default(),
            output: None,
            record_timing: false,
            max_n: default_max_n(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.theta, self.drift)
    }

    /// True when paths come from the finite-difference scheme.
    pub fn uses_scheme(&self) -> bool {
        self.kind == ExperimentKind::Semilinear || !self.drift.is_zero()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(field, msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            );
        }
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return bad("theta", format!("must be positive and finite, got {}", self.theta));
        }
        if let Drift::Linear { c } = self.drift {
            if !c.is_finite() {
                return bad("drift.c", format!("must be finite, got {c}"));
            }
        }
        if self.n_list.is_empty() {
            return bad("n_list", "must list at least one N".into());
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return bad("n_list", format!("every N must be >= 2, got {n}"));
        }
        if self.replicates < 1 {
            return bad("replicates", "M must be >= 1".into());
        }
        let needs_samples = !matches!(self.kind, ExperimentKind::Moments);
        if needs_samples && self.replicates < 10 {
            return bad(
                "replicates",
                format!("{} experiments need M >= 10, got {}", self.kind.name(), self.replicates),
            );
        }
        for g in self.selection.gammas() {
            if !(0.0..=1.0).contains(&g) {
                let field = if self.selection.gamma_list.is_empty() {
                    "selection.gamma"
                } else {
                    "selection.gamma_list"
                };
                return bad(field, format!("gamma must satisfy 0 <= gamma <= 1, got {g}"));
            }
        }
        if self.uses_scheme() {
            if self.field.steps_per_obs == 0 {
                return bad("field.steps_per_obs", "must be >= 1".into());
            }
            for &n in &self.n_list {
                self.field.grid_for(n).validate()?;
            }
        } else if let Some(&n) = self.n_list.iter().find(|&&n| n > self.max_n) {
            return bad(
                "n_list",
                format!("N = {n} exceeds max_n = {}; raise max_n explicitly", self.max_n),
            );
        }
        Ok(())
    }

    /// Rough single-core cost in seconds.
    pub fn estimated_seconds(&self) -> f64 {
        let m = self.replicates as f64;
        let mut secs = 0.0;
        for &n in &self.n_list {
            let nf = n as f64;
            secs += match self.kind {
                ExperimentKind::Moments => 1.5e-9 * nf * nf * nf / 6.0 + 4e-9 * nf * nf,
                _ if self.uses_scheme() => {
                    let legs = if self.drift.is_zero() { 1.0 } else { 1.6 };
                    legs * 1.5e-8 * m * (self.field.steps_per_obs as f64) * nf * self.field.cells as f64
                }
                _ => 1.5e-9 * (nf * nf * nf / 6.0 + m * nf * nf / 2.0),
            };
        }
        secs
    }
}

/// Worker count and similar execution settings that must not change results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// `None`: environment override, else rayon's default.
    pub workers: Option<usize>,
}
