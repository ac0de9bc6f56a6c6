//! Running one scenario and writing its CSV files.
//!
//! The time series has one row per output sample with columns, in order:
//! `t`; for every monitored pair `a/b` (ascending body index)
//! `a/b.force`, `a/b.v`, `a/b.v_f_dot`, `a/b.delta_eff`; for every body
//! `name.x`, `.y`, `.z`, `.qw`, `.qx`, `.qy`, `.qz`, `.vx`, `.vy`, `.vz`,
//! `.wx`, `.wy`, `.wz`, `.ke`; then `ke_expected` and `ke_ratio`, empty when
//! the scenario has no energy reference.

use std::fs;
use std::path::{Path, PathBuf};

use compliant_core::scene::SimError;
use compliant_core::{MetricsSample, World};
use log::{info, warn};
use serde::Serialize;

use crate::build::build_world;
use crate::config::ScenarioConfig;
use crate::HarnessError;

const BODY_COLUMNS: [&str; 14] = [
    "x", "y", "z", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz", "ke",
];
const PAIR_COLUMNS: [&str; 4] = ["force", "v", "v_f_dot", "delta_eff"];

/// Samples with expected kinetic energy below this fraction of its peak are
/// left out of the ratio statistics; the ratio is meaningless near the
/// reference's turning points.
pub const KE_RATIO_FLOOR: f64 = 0.1;

/// Everything a run produced.
#[derive(Debug)]
pub struct Simulation {
    pub world: World,
    pub samples: Vec<MetricsSample>,
    pub error: Option<SimError>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub status: String,
    pub message: String,
    pub t_final: f64,
    pub samples: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub evaluations: usize,
    pub warnings: usize,
    pub max_contact_force: f64,
    pub max_overlap_volume: f64,
    pub ke_ratio_mean: Option<f64>,
    pub ke_ratio_max: Option<f64>,
}

impl RunSummary {
    pub fn failed(&self) -> bool {
        self.status != "ok"
    }
}

/// Builds and runs the scenario. An integration failure ends the run early
/// and is reported in [`Simulation::error`] alongside the samples so far.
pub fn simulate(config: &ScenarioConfig) -> Result<Simulation, HarnessError> {
    let mut world = build_world(config)?;
    let mut samples = Vec::new();
    let mut error = None;
    // Advance one output interval at a time so a failure keeps the history.
    let intervals = (config.duration / config.output_step).ceil() as usize;
    for k in 1..=intervals {
        let t_end = (k as f64 * config.output_step).min(config.duration);
        match world.step(t_end) {
            Ok(batch) => samples.extend(batch),
            Err(e) => {
                warn!("{}: {e}", config.scenario);
                error = Some(e);
                break;
            }
        }
    }
    Ok(Simulation { world, samples, error })
}

/// Mean and max of the kinetic-energy ratio over samples whose expected
/// energy is at least [`KE_RATIO_FLOOR`] of its peak.
pub fn ke_ratio_stats(samples: &[MetricsSample]) -> Option<(f64, f64)> {
    let peak = samples.iter().filter_map(|s| s.expected_energy).fold(0.0, f64::max);
    let ratios: Vec<f64> = samples
        .iter()
        .filter(|s| s.expected_energy.is_some_and(|e| e > 0.0 && e >= KE_RATIO_FLOOR * peak))
        .filter_map(|s| s.ke_ratio)
        .collect();
    if ratios.is_empty() {
        return None;
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Some((mean, ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
}

pub fn summarize(config: &ScenarioConfig, sim: &Simulation) -> RunSummary {
    let stats = sim.world.integrator_stats();
    let fold = |f: fn(&compliant_core::scene::ContactSample) -> f64| {
        sim.samples
            .iter()
            .flat_map(|s| s.contacts.iter().map(f))
            .fold(0.0, f64::max)
    };
    let ratio = ke_ratio_stats(&sim.samples);
    RunSummary {
        scenario: config.scenario.clone(),
        status: if sim.error.is_some() { "failed" } else { "ok" }.to_string(),
        message: sim.error.as_ref().map(|e| e.to_string()).unwrap_or_default(),
        t_final: sim.world.time,
        samples: sim.samples.len(),
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
        evaluations: stats.evaluations,
        warnings: sim.world.warnings,
        max_contact_force: fold(|c| c.force),
        max_overlap_volume: fold(|c| c.v),
        ke_ratio_mean: ratio.map(|r| r.0),
        ke_ratio_max: ratio.map(|r| r.1),
    }
}

/// Column names of the time series for `world`.
pub fn header(world: &World) -> Vec<String> {
    let mut columns = vec!["t".to_string()];
    for (a, b) in world.monitored_pairs() {
        let pair = format!("{}/{}", world.names[a], world.names[b]);
        columns.extend(PAIR_COLUMNS.iter().map(|c| format!("{pair}.{c}")));
    }
    for name in &world.names {
        columns.extend(BODY_COLUMNS.iter().map(|c| format!("{name}.{c}")));
    }
    columns.push("ke_expected".into());
    columns.push("ke_ratio".into());
    columns
}

fn row(sample: &MetricsSample) -> Vec<String> {
    let mut values = vec![sample.t];
    for c in &sample.contacts {
        values.extend([c.force, c.v, c.v_f_dot, c.delta_eff]);
    }
    for b in &sample.bodies {
        let q = b.orientation.quaternion();
        values.extend(b.position.iter());
        values.extend([q.w, q.i, q.j, q.k]);
        values.extend(b.lin_vel.iter());
        values.extend(b.ang_vel_body.iter());
        values.push(b.kinetic_energy);
    }
    let mut fields: Vec<String> = values.iter().map(f64::to_string).collect();
    let optional = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    fields.push(optional(sample.expected_energy));
    fields.push(optional(sample.ke_ratio));
    fields
}

pub fn write_time_series(path: &Path, world: &World, samples: &[MetricsSample]) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header(world))?;
    for sample in samples {
        writer.write_record(row(sample))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, summaries: &[RunSummary]) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_path(path)?;
    for summary in summaries {
        writer.serialize(summary)?;
    }
    writer.flush()?;
    Ok(())
}

/// Path of the time series a run of `config` writes into `out`.
pub fn time_series_path(config: &ScenarioConfig, out: &Path) -> PathBuf {
    out.join(format!("{}.csv", config.scenario))
}

/// Runs `config`, writing `<scenario>.csv` and `summary.csv` into `out`.
pub fn run_scenario(config: &ScenarioConfig, out: &Path) -> Result<RunSummary, HarnessError> {
    fs::create_dir_all(out)?;
    info!("running {} for {} s", config.scenario, config.duration);
    let sim = simulate(config)?;
    write_time_series(&time_series_path(config, out), &sim.world, &sim.samples)?;
    let summary = summarize(config, &sim);
    write_summary(&out.join("summary.csv"), std::slice::from_ref(&summary))?;
    Ok(summary)
}
