use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use pmlbie::config::{Experiment, RunConfig};
use pmlbie::driver::{default_grid, run, write_artifacts};

#[derive(Parser)]
#[command(name = "pmlbie", version, about = "PML boundary integral solver for half-space and two-layer acoustic scattering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration (defaults apply to anything left out).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for the artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Single solve; `eps_inf` against the exact field when manufactured.
    Solve,
    /// Error table over the configured list of N (default 16, 32, 64).
    Convergence,
    /// Error versus absorbing-layer thickness (default 0.5 to 3 wavelengths).
    PmlSweep,
    /// Field on a grid of points.
    Field,
    /// Quick invariant checks; nonzero exit on any failure.
    Selftest,
}

/// The subcommand picks the experiment; its parameters come from the
/// configuration when the kinds agree.
fn experiment_for(command: Command, cfg: &RunConfig) -> Experiment {
    match (command, &cfg.experiment) {
        (Command::Solve, _) => Experiment::Solve,
        (Command::Convergence, e @ Experiment::Convergence { .. }) => e.clone(),
        (Command::Convergence, _) => Experiment::Convergence { ns: vec![16, 32, 64] },
        (Command::PmlSweep, e @ Experiment::PmlSweep { .. }) => e.clone(),
        (Command::PmlSweep, _) => Experiment::PmlSweep { t_over_lambda: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0] },
        (Command::Field, e @ Experiment::Field { .. }) => e.clone(),
        (Command::Field, _) => Experiment::Field { grid: default_grid(&cfg.problem) },
        (Command::Selftest, _) => Experiment::Selftest,
    }
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            RunConfig::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    cfg.experiment = experiment_for(cli.command, &cfg);
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("{e}");
            return ExitCode::from(1);
        }
    }
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(1);
        }
    };
    let dir = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(1);
        }
    };
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Err(e) = write_artifacts(&cfg, &report, &dir) {
        error!("writing artifacts to {}: {e}", dir.display());
        return ExitCode::from(2);
    }
    info!("artifacts written to {}", dir.display());
    if let Some(e) = &report.error {
        error!("solver failure: {e}");
    }
    if report.failed(cfg.problem.gmres().tol) {
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
