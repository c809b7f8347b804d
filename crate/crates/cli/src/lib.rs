//! Command-line harness: config handling, experiment drivers, output
//! formatting and the invariant suite.

pub mod args;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod verify;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
use config::{Experiment, ExperimentConfig};
use error::CliError;
use output::{emit, render_summary, Header};
use verify::Fault;

/// What a parsed command line resolves to.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub config: ExperimentConfig,
    pub fault: Option<Fault>,
}

/// Builds the effective config: defaults, then the config file, then flags.
pub fn resolve(cli: &Cli) -> Result<Invocation, CliError> {
    let (mut config, mut eta_given) = match &cli.common.config {
        Some(path) => {
            let loaded = ExperimentConfig::load(path)?;
            (loaded.config, loaded.eta_given)
        }
        None => (ExperimentConfig::default(), false),
    };
    config.experiment = cli.command.experiment();
    eta_given |= cli.common.eta.is_some();
    cli.common.apply(&mut config);
    cli.command.apply(&mut config);
    config.normalize(eta_given);
    config.validate()?;
    let fault = match &cli.command {
        Command::Verify { inject_fault } => *inject_fault,
        _ => None,
    };
    Ok(Invocation { config, fault })
}

/// Runs a resolved invocation, writing its outputs.
pub fn execute(inv: &Invocation) -> Result<(), CliError> {
    let cfg = &inv.config;
    if cfg.experiment == Experiment::Verify {
        let report = verify::run_verify(inv.fault);
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        match &cfg.output {
            Some(path) => std::fs::write(path, &text)?,
            None => print!("{text}"),
        }
        return if report.passed {
            Ok(())
        } else {
            Err(CliError::Verify(report.failed.join(", ")))
        };
    }

    let pool = runner::thread_pool(cfg.threads)?;
    let header = Header::new(cfg);
    let (table, summary) = match cfg.experiment {
        Experiment::Prepare | Experiment::Noise => {
            let records = runner::run_trajectories(cfg, &pool)?;
            let summary = runner::TrajectorySummary::from_records(&records, cfg, &cfg.summary);
            (runner::trajectory_table(&records), render_summary(&header, &summary))
        }
        Experiment::Project => {
            let (table, summary) = runner::run_project(cfg, &pool)?;
            (table, render_summary(&header, &summary))
        }
        Experiment::Recompile => {
            let (table, summary) = runner::run_recompile(cfg, &pool)?;
            (table, render_summary(&header, &summary))
        }
        Experiment::Verify => unreachable!("handled above"),
    };
    emit(cfg.output.as_deref(), &table.render(&header, cfg.format), &summary)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match resolve(&cli).and_then(|inv| execute(&inv)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("aklt-mite: {e}");
            e.exit_code()
        }
    }
}
