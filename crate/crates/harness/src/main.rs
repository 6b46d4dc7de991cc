use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use metasp_harness::{execute, Command, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "metasp", version, about = "Shared-subspace multi-task regression experiments")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's output_dir, then `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides experiment.seed_base.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Verb,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Sweep one DGP parameter; writes results.csv and summary.csv.
    Sweep,
    /// Minimal number of tasks reaching the target subspace error.
    MinTasks,
    /// Per-iteration loss and distances; writes trace.csv.
    Trace,
    /// Meta-train, meta-test, test-train and test-test errors.
    Adapt,
    /// Isometry ratios of random low-rank probes.
    RipProbe,
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let path = cli.config.ok_or_else(|| HarnessError::config("--config is required"))?;
    let mut cfg = ExperimentConfig::from_path(&path)?;
    if let Some(seed) = cli.seed {
        cfg.experiment.seed_base = seed;
    }
    let out = cli
        .out
        .or_else(|| cfg.experiment.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let command = match cli.command {
        Verb::Sweep => Command::Sweep,
        Verb::MinTasks => Command::MinTasks,
        Verb::Trace => Command::Trace,
        Verb::Adapt => Command::Adapt,
        Verb::RipProbe => Command::RipProbe,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| HarnessError::config(e.to_string()))?;
    let written = pool.install(|| execute(command, &cfg, &out))?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
