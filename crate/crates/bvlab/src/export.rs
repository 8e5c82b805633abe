//! Plot-ready CSV tables derived from a report.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::Value;

use crate::report::{write_csv, EnergyRow, PairingRow, VortexRow, PAIRING_HEADER, VORTEX_HEADER};

fn rows<T: serde::de::DeserializeOwned>(report: &Value, key: &str) -> Result<Vec<T>> {
    match report.get(key) {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(v) => serde_json::from_value(v.clone()).with_context(|| format!("field `{key}`")),
    }
}

/// Writes `energy_vs_logeps.csv`, `pairings_table.csv`, `vortex_positions.csv`
/// and `boundary_phase.csv` into `out`; missing sections give header-only files.
pub fn export_plotdata(report_path: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(report_path).with_context(|| format!("reading {}", report_path.display()))?;
    let report: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", report_path.display()))?;
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();

    let series: Vec<EnergyRow> = rows(&report, "series")?;
    let energy: Vec<(String, f64, f64, f64, f64)> =
        series.iter().map(|r| (r.label.clone(), r.log_inv_eps, r.eps, r.total, r.excess)).collect();
    let p = out.join("energy_vs_logeps.csv");
    write_csv(&p, &["label", "log_inv_eps", "eps", "energy", "excess"], &energy)?;
    written.push(p);

    let pairings: Vec<PairingRow> = rows(&report, "pairings")?;
    let p = out.join("pairings_table.csv");
    write_csv(&p, PAIRING_HEADER, &pairings)?;
    written.push(p);

    let vortices: Vec<VortexRow> = rows(&report, "vortex_trace")?;
    let p = out.join("vortex_positions.csv");
    write_csv(&p, VORTEX_HEADER, &vortices)?;
    written.push(p);

    let mut phase: Vec<(f64, f64)> = Vec::new();
    let trace = report_path.with_file_name("boundary_trace.csv");
    if trace.exists() {
        let mut r = csv::Reader::from_path(&trace)?;
        let mut last: Option<f64> = None;
        let mut offset = 0.0;
        for rec in r.deserialize::<(f64, f64, f64, f64, f64)>() {
            let (s, _, _, _, ph) = rec?;
            if let Some(l) = last {
                let d = ph + offset - l;
                offset -= std::f64::consts::TAU * (d / std::f64::consts::TAU).round();
            }
            last = Some(ph + offset);
            phase.push((s, ph + offset));
        }
    }
    let p = out.join("boundary_phase.csv");
    write_csv(&p, &["s", "phase"], &phase)?;
    written.push(p);
    Ok(written)
}
