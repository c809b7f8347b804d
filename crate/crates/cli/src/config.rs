//! Experiment configuration: a single JSON document, overridden by flags.

use std::path::{Path, PathBuf};

use aklt_mite::mite::ProjectionStart;
use aklt_mite::recompile::OptimizerConfig;
use aklt_mite::spin::{BondMode, MAX_SPIN1_SITES, MIN_SITES};
use aklt_mite::qubit::MAX_QUBIT_SITES;
use aklt_mite::MiteConfig;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    #[default]
    Prepare,
    Project,
    Noise,
    Recompile,
    Verify,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Prepare => "prepare",
            Experiment::Project => "project",
            Experiment::Noise => "noise",
            Experiment::Recompile => "recompile",
            Experiment::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Spin1,
    Qubit,
}

impl Mode {
    pub fn bond_mode(self) -> BondMode {
        match self {
            Mode::Spin1 => BondMode::Spin1,
            Mode::Qubit => BondMode::QubitMapped,
        }
    }

    pub fn max_sites(self) -> usize {
        match self {
            Mode::Spin1 => MAX_SPIN1_SITES,
            Mode::Qubit => MAX_QUBIT_SITES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectSettings {
    pub sites: Vec<usize>,
    pub rounds: usize,
    pub start: ProjectionStart,
    pub level: f64,
}

impl Default for ProjectSettings {
    fn default() -> Self {
        ProjectSettings {
            sites: (3..=8).collect(),
            rounds: 15,
            start: ProjectionStart::XNeel,
            level: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecompileSettings {
    pub epsilon: f64,
    pub layers: Vec<usize>,
    /// `repetitions` and `seed` are taken from `runs` and `seed` at the top level.
    pub optimizer: OptimizerConfig,
}

impl Default for RecompileSettings {
    fn default() -> Self {
        RecompileSettings {
            epsilon: 0.5,
            layers: (1..=7).collect(),
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// Summary settings for trajectory experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummarySettings {
    /// Fidelity level for rounds-to-level statistics and `r_c`.
    pub level: f64,
    /// Rounds `r >= late_from` enter the late peak-energy average.
    pub late_from: usize,
    /// Rounds `1..=early_rounds` enter the early mean fidelity.
    pub early_rounds: usize,
}

impl Default for SummarySettings {
    fn default() -> Self {
        SummarySettings {
            level: 0.9,
            late_from: 80,
            early_rounds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub mode: Mode,
    pub n: usize,
    pub runs: usize,
    /// Base seed. Run `i` uses `seed + i`; `mite.seed` and
    /// `recompile.optimizer.seed` are overwritten with it.
    pub seed: u64,
    pub mite: MiteConfig,
    pub project: ProjectSettings,
    pub recompile: RecompileSettings,
    pub summary: SummarySettings,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            experiment: Experiment::Prepare,
            mode: Mode::Spin1,
            n: 4,
            runs: 20,
            seed: 0,
            mite: MiteConfig::default(),
            project: ProjectSettings::default(),
            recompile: RecompileSettings::default(),
            summary: SummarySettings::default(),
            output: None,
            format: Format::Csv,
            threads: None,
        }
    }
}

/// Parsed file plus whether it pinned `mite.eta`, which otherwise follows the mode.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub eta_given: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<LoadedConfig, CliError> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config is not JSON: {e}")))?;
        let version = raw.get("schema_version").and_then(|v| v.as_u64());
        match version {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(CliError::Config(format!(
                    "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
                )))
            }
            None => return Err(CliError::Config("config lacks schema_version".into())),
        }
        let eta_given = raw.pointer("/mite/eta").is_some();
        let config = serde_json::from_value(raw).map_err(|e| CliError::Config(format!("bad config: {e}")))?;
        Ok(LoadedConfig { config, eta_given })
    }

    pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Copies the shared fields into the nested configs.
    pub fn normalize(&mut self, eta_given: bool) {
        if !eta_given && self.mode == Mode::Qubit {
            self.mite.eta = MiteConfig::for_mode(BondMode::QubitMapped).eta;
        }
        self.mite.seed = self.seed;
        self.recompile.optimizer.seed = self.seed;
        self.recompile.optimizer.repetitions = self.runs;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {}", self.schema_version));
        }
        if self.runs < 1 {
            return bad("runs must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        let check_sites = |n: usize, mode: Mode| {
            if (MIN_SITES..=mode.max_sites()).contains(&n) {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "N = {n} outside the supported range {MIN_SITES}..={} for {mode:?}",
                    mode.max_sites()
                )))
            }
        };
        match self.experiment {
            Experiment::Prepare | Experiment::Noise => {
                check_sites(self.n, self.mode)?;
                self.mite.validate().map_err(|e| CliError::Config(e.to_string()))?;
                if self.experiment == Experiment::Noise && self.mite.noise.is_none() {
                    return bad("noise experiment needs a noise spec (--sigma2, --axis)".into());
                }
                let s = &self.summary;
                if !(s.level > 0.0 && s.level <= 1.0) {
                    return bad(format!("summary level must be in (0, 1], got {}", s.level));
                }
            }
            Experiment::Project => {
                if self.project.sites.is_empty() {
                    return bad("project needs at least one chain length".into());
                }
                for &n in &self.project.sites {
                    check_sites(n, Mode::Spin1)?;
                }
                if !(self.project.level > 0.0 && self.project.level <= 1.0) {
                    return bad(format!("project level must be in (0, 1], got {}", self.project.level));
                }
            }
            Experiment::Recompile => {
                let r = &self.recompile;
                if !(r.epsilon.is_finite()) {
                    return bad("recompile epsilon must be finite".into());
                }
                if r.layers.is_empty() {
                    return bad("recompile needs at least one depth".into());
                }
                if r.layers.iter().any(|&n| n > 64) {
                    return bad("recompile depths above 64 are not supported".into());
                }
                r.optimizer.validate().map_err(|e| CliError::Config(e.to_string()))?;
            }
            Experiment::Verify => {}
        }
        Ok(())
    }

    /// The config as it is hashed and echoed in output headers. Output path
    /// and thread count do not change results, so they are left out.
    pub fn replay_view(&self) -> ExperimentConfig {
        ExperimentConfig {
            output: None,
            threads: None,
            ..self.clone()
        }
    }

    pub fn replay_json(&self) -> String {
        serde_json::to_string(&self.replay_view()).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.replay_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_version_is_required() {
        assert!(ExperimentConfig::from_json("{}").is_err());
        assert!(ExperimentConfig::from_json(r#"{"schema_version": 7}"#).is_err());
        let loaded = ExperimentConfig::from_json(r#"{"schema_version": 1, "n": 5}"#).unwrap();
        assert_eq!(loaded.config.n, 5);
        assert!(!loaded.eta_given);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"schema_version": 1, "sites": 5}"#).is_err());
    }

    #[test]
    fn qubit_mode_follows_its_eta_unless_pinned() {
        let mut c = ExperimentConfig::from_json(r#"{"schema_version": 1, "mode": "qubit"}"#)
            .unwrap()
            .config;
        c.normalize(false);
        assert_eq!(c.mite.eta, 2.0);
        let loaded =
            ExperimentConfig::from_json(r#"{"schema_version": 1, "mode": "qubit", "mite": {"eta": 3.0}}"#)
                .unwrap();
        let mut c = loaded.config;
        c.normalize(loaded.eta_given);
        assert_eq!(c.mite.eta, 3.0);
    }

    #[test]
    fn site_bounds_depend_on_mode() {
        let mut c = ExperimentConfig { n: 2, ..Default::default() };
        assert!(c.validate().is_err());
        c.n = 9;
        assert!(c.validate().is_ok());
        c.mode = Mode::Qubit;
        c.normalize(false);
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_and_threads() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            output: Some("x.csv".into()),
            threads: Some(3),
            ..Default::default()
        };
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig { seed: 1, ..Default::default() };
        assert_ne!(a.hash(), c.hash());
    }
}
