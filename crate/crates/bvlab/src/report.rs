//! Report schema: one JSON document per run plus flat CSV tables.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const SCHEMA: &str = "bvlab.report/1";

// JSON has no NaN or infinity; serde_json writes them as null.
fn float<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub label: String,
    #[serde(deserialize_with = "float")]
    pub eps: f64,
    #[serde(deserialize_with = "float")]
    pub eta: f64,
    #[serde(deserialize_with = "float")]
    pub log_inv_eps: f64,
    #[serde(deserialize_with = "float")]
    pub dirichlet: f64,
    #[serde(deserialize_with = "float")]
    pub penalty: f64,
    #[serde(deserialize_with = "float")]
    pub anchoring: f64,
    #[serde(deserialize_with = "float")]
    pub total: f64,
    /// Energy minus the leading logarithmic term (or minus the oracle).
    #[serde(deserialize_with = "float")]
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexRow {
    pub label: String,
    #[serde(deserialize_with = "float")]
    pub eps: f64,
    #[serde(deserialize_with = "float")]
    pub t: f64,
    pub d: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingRow {
    pub label: String,
    #[serde(deserialize_with = "float")]
    pub global: f64,
    #[serde(deserialize_with = "float")]
    pub interior: f64,
    #[serde(deserialize_with = "float")]
    pub boundary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(deserialize_with = "float")]
    pub value: f64,
    #[serde(deserialize_with = "float")]
    pub limit: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Check {
    /// `value ≤ limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), passed: value <= limit, value, limit, note: String::new() }
    }

    /// `value ≥ limit`.
    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), passed: value >= limit, value, limit, note: String::new() }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub bvlab: String,
    pub bvlab_core: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub task: String,
    pub versions: Versions,
    pub config_hash: String,
    pub config: serde_json::Value,
    /// Seconds since the Unix epoch; the only field that differs between identical runs.
    pub timestamp: u64,
    pub seed: u64,
    #[serde(default)]
    pub series: Vec<EnergyRow>,
    #[serde(default)]
    pub vortex_trace: Vec<VortexRow>,
    #[serde(default)]
    pub pairings: Vec<PairingRow>,
    #[serde(default)]
    pub results: serde_json::Value,
    #[serde(default)]
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        let mut embedded = config.clone();
        embedded.output = None;
        Report {
            schema: SCHEMA.into(),
            task: config.task.name().into(),
            versions: Versions { bvlab: env!("CARGO_PKG_VERSION").into(), bvlab_core: bvlab_core_version().into() },
            config_hash: embedded.hash(),
            config: serde_json::to_value(&embedded).expect("config is serializable"),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed: config.seed,
            series: Vec::new(),
            vortex_trace: Vec::new(),
            pairings: Vec::new(),
            results: serde_json::Value::Null,
            checks: Vec::new(),
            passed: true,
            error: None,
        }
    }

    pub fn finish(&mut self) {
        self.passed = self.error.is_none() && self.checks.iter().all(|c| c.passed);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))
    }
}

fn bvlab_core_version() -> &'static str {
    // both crates are versioned together in the workspace
    env!("CARGO_PKG_VERSION")
}

/// Writes `rows` with a header even when empty.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const ENERGY_HEADER: &[&str] = &["label", "eps", "eta", "log_inv_eps", "dirichlet", "penalty", "anchoring", "total", "excess"];
pub const PAIRING_HEADER: &[&str] = &["label", "global", "interior", "boundary"];
pub const VORTEX_HEADER: &[&str] = &["label", "eps", "t", "d"];
