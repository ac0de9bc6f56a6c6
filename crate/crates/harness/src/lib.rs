//! Scenario harness for `compliant-core`: JSON configuration, world
//! construction, CSV output and parameter sweeps.

pub mod build;
pub mod config;
pub mod oracle;
pub mod run;
pub mod sweep;

use thiserror::Error;

pub use build::build_world;
pub use config::{load_config, parse_config, ScenarioConfig};
pub use run::{run_scenario, RunSummary};
pub use sweep::{run_sweep, SweepRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("{0}")]
    Io(String),
    #[error("body {name:?}: {message}")]
    Body { name: String, message: String },
    #[error("no sweep parameters")]
    NoSweep,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
