//! Parameter sweeps: one independent world per grid cell.

use std::fs;
use std::path::Path;

use log::info;
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::run::{ke_ratio_stats, simulate};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Swept parameter values, alphabetical by name.
    pub coordinates: Vec<(String, f64)>,
    pub ke_ratio_mean: Option<f64>,
    pub ke_ratio_max: Option<f64>,
    pub failed: bool,
    pub message: String,
}

fn run_cell(coordinates: Vec<(String, f64)>, config: &ScenarioConfig) -> SweepRow {
    let (failed, message, stats) = match simulate(config) {
        Ok(sim) => {
            let message = sim.error.as_ref().map(|e| e.to_string()).unwrap_or_default();
            (sim.error.is_some(), message, ke_ratio_stats(&sim.samples))
        }
        Err(e) => (true, e.to_string(), None),
    };
    info!("cell {coordinates:?}: failed = {failed}, ke ratio = {stats:?}");
    SweepRow {
        coordinates,
        ke_ratio_mean: stats.map(|s| s.0),
        ke_ratio_max: stats.map(|s| s.1),
        failed,
        message,
    }
}

/// Runs every cell of the sweep grid on `jobs` threads (all cores when
/// `None`). Rows come back in grid order whatever the scheduling.
pub fn run_sweep(config: &ScenarioConfig, jobs: Option<usize>) -> Result<Vec<SweepRow>, HarnessError> {
    let cells = config.sweep_cells()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(pool.install(|| {
        cells
            .into_par_iter()
            .map(|(coordinates, cell)| run_cell(coordinates, &cell))
            .collect()
    }))
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = rows
        .first()
        .map(|r| r.coordinates.iter().map(|(n, _)| n.clone()).collect())
        .unwrap_or_default();
    header.extend(["ke_ratio_mean", "ke_ratio_max", "failed", "message"].map(String::from));
    writer.write_record(&header)?;
    let optional = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for row in rows {
        let mut fields: Vec<String> = row.coordinates.iter().map(|(_, v)| v.to_string()).collect();
        fields.push(optional(row.ke_ratio_mean));
        fields.push(optional(row.ke_ratio_max));
        fields.push(row.failed.to_string());
        fields.push(row.message.clone());
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}

/// Runs the sweep and writes `sweep.csv` into `out`.
pub fn sweep_to_dir(config: &ScenarioConfig, out: &Path, jobs: Option<usize>) -> Result<Vec<SweepRow>, HarnessError> {
    let rows = run_sweep(config, jobs)?;
    fs::create_dir_all(out)?;
    write_sweep(&out.join("sweep.csv"), &rows)?;
    Ok(rows)
}
