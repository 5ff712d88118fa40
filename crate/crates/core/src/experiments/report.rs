//! Long-format report rows, CSV writer and JSON metadata sidecar.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = ["experiment", "N", "stat", "value", "stderr", "seed", "wall_ms"];

/// One statistic. `n = 0` marks rows that aggregate over all `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub stat: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub seed: u64,
    pub wall_ms: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub config: ExperimentConfig,
    pub code_version: String,
    /// Cholesky jitter per `N` (exact sources only).
    pub jitter: BTreeMap<usize, f64>,
    pub notes: Vec<String>,
    pub timings_ms: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub metadata: ReportMetadata,
}

impl ExperimentReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            rows: Vec::new(),
            metadata: ReportMetadata {
                config: config.clone(),
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                jitter: BTreeMap::new(),
                notes: Vec::new(),
                timings_ms: BTreeMap::new(),
            },
        }
    }

    pub fn push(&mut self, experiment: &str, n: usize, stat: impl Into<String>, value: f64, stderr: Option<f64>, seed: u64) {
        self.rows.push(ReportRow {
            experiment: experiment.to_string(),
            n,
            stat: stat.into(),
            value,
            stderr,
            seed,
            wall_ms: None,
        });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.metadata.notes.push(note.into());
    }

    /// Stamps `wall_ms` on the rows for `n` added since `first_row`, if the
    /// config asks for it; always records the timing in the metadata.
    pub(crate) fn stamp_timing(&mut self, label: String, first_row: usize, n: usize, ms: u64) {
        if self.metadata.config.record_timing {
            for r in &mut self.rows[first_row..] {
                if r.n == n {
                    r.wall_ms = Some(ms);
                }
            }
        }
        self.metadata.timings_ms.insert(label, ms);
    }

    pub fn row(&self, n: usize, stat: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.n == n && r.stat == stat)
    }

    pub fn value(&self, n: usize, stat: &str) -> Option<f64> {
        self.row(n, stat).map(|r| r.value)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            wr.write_record([
                r.experiment.clone(),
                r.n.to_string(),
                r.stat.clone(),
                format_f64(r.value),
                r.stderr.map(format_f64).unwrap_or_default(),
                r.seed.to_string(),
                r.wall_ms.map(|v| v.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn metadata_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.metadata).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Writes `path` (CSV) and `path` with extension `.json` (metadata).
    /// Returns the sidecar path.
    pub fn write_files(&self, path: &Path) -> Result<PathBuf> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        self.write_csv(std::fs::File::create(path)?)?;
        let sidecar = path.with_extension("json");
        std::fs::write(&sidecar, self.metadata_json()?)?;
        Ok(sidecar)
    }
}

/// Shortest round-trip representation.
fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}
