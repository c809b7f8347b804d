use std::path::PathBuf;

use aklt_mite::mite::ProjectionStart;
use aklt_mite::{Axis, NoiseSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Experiment, ExperimentConfig, Format, Mode};
use crate::verify::Fault;

#[derive(Debug, Parser)]
#[command(name = "aklt-mite", version, about = "AKLT state preparation by weak measurement and feedback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON experiment config (must carry `schema_version`).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Base seed; run `i` uses `seed + i`.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Trajectories (prepare, noise) or repetitions per depth (recompile).
    #[arg(long, global = true, value_name = "K")]
    pub runs: Option<usize>,
    /// Chain length. For `project` this selects a single length.
    #[arg(long = "n", global = true, value_name = "N")]
    pub n: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
    /// Measurement strength; also the recompile target angle.
    #[arg(long, global = true, value_name = "F")]
    pub epsilon: Option<f64>,
    #[arg(long, global = true, value_name = "F")]
    pub eta: Option<f64>,
    /// Round limit for trajectories and projection.
    #[arg(long, global = true, value_name = "R")]
    pub rounds: Option<usize>,
    #[arg(long, global = true, value_name = "T", env = "AKLT_MITE_THREADS")]
    pub threads: Option<usize>,
    /// Table path; the summary goes next to it as `<PATH>.summary.json`.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

impl CommonArgs {
    pub fn apply(&self, c: &mut ExperimentConfig) {
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.runs {
            c.runs = v;
        }
        if let Some(v) = self.n {
            c.n = v;
            c.project.sites = vec![v];
        }
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = self.epsilon {
            c.mite.epsilon = v;
            c.recompile.epsilon = v;
        }
        if let Some(v) = self.eta {
            c.mite.eta = v;
        }
        if let Some(v) = self.rounds {
            c.mite.r_max = v;
            c.project.rounds = v;
        }
        if let Some(v) = self.threads {
            c.threads = Some(v);
        }
        if let Some(v) = &self.out {
            c.output = Some(v.clone());
        }
        if let Some(v) = self.format {
            c.format = v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseAxis {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    XNeel,
    XPolarized,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measurement-feedback trajectories from the all-up state.
    Prepare {
        /// Record bond fidelity after every measurement.
        #[arg(long)]
        track_measurements: bool,
        /// Disable the early stop near unit fidelity.
        #[arg(long)]
        no_early_stop: bool,
    },
    /// Deterministic projection for a range of chain lengths.
    Project {
        /// Comma-separated chain lengths.
        #[arg(long, value_delimiter = ',', value_name = "N,..")]
        sites: Option<Vec<usize>>,
        #[arg(long, value_enum)]
        start: Option<StartArg>,
    },
    /// Trajectories with random single-site rotations each round.
    Noise {
        #[arg(long, value_enum)]
        axis: Option<NoiseAxis>,
        /// Width of the rotation-angle density `exp(-xi^2 / sigma2)`.
        #[arg(long, value_name = "F")]
        sigma2: Option<f64>,
        #[arg(long)]
        no_early_stop: bool,
    },
    /// Fit the layered circuit to the measurement unitary.
    Recompile {
        /// Comma-separated layer counts.
        #[arg(long, value_delimiter = ',', value_name = "L,..")]
        layers: Option<Vec<usize>>,
        #[arg(long)]
        max_iters: Option<u64>,
        #[arg(long)]
        hops: Option<usize>,
    },
    /// Run the invariant suite and print a JSON report.
    Verify {
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
}

impl Command {
    pub fn experiment(&self) -> Experiment {
        match self {
            Command::Prepare { .. } => Experiment::Prepare,
            Command::Project { .. } => Experiment::Project,
            Command::Noise { .. } => Experiment::Noise,
            Command::Recompile { .. } => Experiment::Recompile,
            Command::Verify { .. } => Experiment::Verify,
        }
    }

    pub fn apply(&self, c: &mut ExperimentConfig) {
        match self {
            Command::Prepare {
                track_measurements,
                no_early_stop,
            } => {
                c.mite.track_measurements |= *track_measurements;
                if *no_early_stop {
                    c.mite.early_stop = None;
                }
            }
            Command::Project { sites, start } => {
                if let Some(s) = sites {
                    c.project.sites = s.clone();
                }
                if let Some(s) = start {
                    c.project.start = match s {
                        StartArg::XNeel => ProjectionStart::XNeel,
                        StartArg::XPolarized => ProjectionStart::XPolarized,
                    };
                }
            }
            Command::Noise {
                axis,
                sigma2,
                no_early_stop,
            } => {
                if axis.is_some() || sigma2.is_some() {
                    let base = c.mite.noise.unwrap_or(NoiseSpec {
                        axis: Axis::Z,
                        sigma2: 0.0,
                    });
                    c.mite.noise = Some(NoiseSpec {
                        axis: match axis {
                            Some(NoiseAxis::X) => Axis::X,
                            Some(NoiseAxis::Z) => Axis::Z,
                            None => base.axis,
                        },
                        sigma2: sigma2.unwrap_or(base.sigma2),
                    });
                }
                if *no_early_stop {
                    c.mite.early_stop = None;
                }
            }
            Command::Recompile {
                layers,
                max_iters,
                hops,
            } => {
                if let Some(l) = layers {
                    c.recompile.layers = l.clone();
                }
                if let Some(v) = max_iters {
                    c.recompile.optimizer.max_iters = *v;
                }
                if let Some(v) = hops {
                    c.recompile.optimizer.hops = *v;
                }
            }
            Command::Verify { .. } => {}
        }
    }
}
