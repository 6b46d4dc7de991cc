//! Experiment harness for the `metasp-core` solvers: configuration files,
//! seeded parameter sweeps, the minimal-task search, iteration traces,
//! restricted isometry probes and the adaptation protocol. Every command
//! writes tidy CSV.

pub mod adapt;
pub mod config;
pub mod error;
pub mod rip;
pub mod sweep;
pub mod trace;

use std::path::{Path, PathBuf};

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sweep,
    MinTasks,
    Trace,
    Adapt,
    RipProbe,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

/// Runs one command and writes its CSV files into `out`. Returns the
/// written paths.
pub fn execute(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    match command {
        Command::Sweep => {
            let rows = sweep::run_sweep(cfg)?;
            Ok(vec![
                write(out, "results.csv", &sweep::results_csv(&rows))?,
                write(out, "summary.csv", &sweep::summary_csv(&rows))?,
            ])
        }
        Command::MinTasks => {
            let (table, probes) = sweep::run_min_tasks(cfg)?;
            Ok(vec![write(out, "min_tasks.csv", &table)?, write(out, "probes.csv", &probes)?])
        }
        Command::Trace => {
            let traces = trace::run_traces(cfg)?;
            Ok(vec![write(out, "trace.csv", &trace::trace_csv(&traces))?])
        }
        Command::Adapt => {
            let outcomes = adapt::run_adapt(cfg)?;
            Ok(vec![write(out, "adapt.csv", &adapt::adapt_csv(&outcomes))?])
        }
        Command::RipProbe => {
            let est = rip::run_rip(cfg)?;
            Ok(vec![
                write(out, "rip.csv", &rip::rip_csv(&est))?,
                write(out, "rip_summary.csv", &rip::rip_summary_csv(cfg, &est))?,
            ])
        }
    }
}
