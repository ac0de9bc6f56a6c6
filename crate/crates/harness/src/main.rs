use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use compliant_harness::config::load_config;
use compliant_harness::run::run_scenario;
use compliant_harness::sweep::sweep_to_dir;
use compliant_harness::HarnessError;

/// Penalty-contact rigid-body scenarios.
#[derive(Parser)]
#[command(name = "compliant-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its time series and summary.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured duration (s).
        #[arg(long)]
        duration: Option<f64>,
        /// Override the maximum integrator step (s).
        #[arg(long = "h-max")]
        h_max: Option<f64>,
    },
    /// Run every cell of the configured sweep grid and write sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to one per core.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a configuration and report every problem found.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run { config, out, duration, h_max } => {
            let mut config = load_config(&config)?;
            if let Some(d) = duration {
                config.duration = d;
            }
            if let Some(h) = h_max {
                config.integrator.h_max = h;
            }
            let errors = config.violations();
            if !errors.is_empty() {
                return Err(HarnessError::Invalid(errors));
            }
            let summary = run_scenario(&config, &out)?;
            if summary.failed() {
                eprintln!("{}: {}", summary.scenario, summary.message);
                return Ok(ExitCode::from(2));
            }
            println!(
                "{}: {} samples, t = {} s, {} accepted / {} rejected steps",
                summary.scenario, summary.samples, summary.t_final, summary.accepted_steps, summary.rejected_steps
            );
        }
        Command::Sweep { config, out, jobs } => {
            let config = load_config(&config)?;
            let rows = sweep_to_dir(&config, &out, jobs)?;
            let failed = rows.iter().filter(|r| r.failed).count();
            println!("{}: {} cells, {} failed", config.scenario, rows.len(), failed);
        }
        Command::Validate { config } => {
            let config = load_config(&config)?;
            println!("{}: ok ({} bodies)", config.scenario, config.bodies.len());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COMPLIANT_LOG", "warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
