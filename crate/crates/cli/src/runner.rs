//! Experiment drivers and their aggregate statistics.

use aklt_mite::mite::{critical_rounds, direct_projection_series, ProjectionStart};
use aklt_mite::qubit::reference_state;
use aklt_mite::recompile::{
    min_layers_for_exact, optimize_repetition, target_unitary, RecompileReport, RepetitionResult,
};
use aklt_mite::spin::aklt_state;
use aklt_mite::{MiteEngine, NoiseSpec, TrajectoryRecord};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Mode, SummarySettings};
use crate::error::CliError;
use crate::output::Table;

pub const THREADS_ENV: &str = "AKLT_MITE_THREADS";

pub fn thread_pool(threads: Option<usize>) -> Result<ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    builder.build().map_err(|e| CliError::runtime("worker pool", e))
}

/// One trajectory per run with seed `base + run_id`, returned in run-id order.
pub fn run_trajectories(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<Vec<TrajectoryRecord>, CliError> {
    let mode = cfg.mode.bond_mode();
    let engine = MiteEngine::new(cfg.mite.clone(), mode, cfg.n).map_err(|e| CliError::Config(e.to_string()))?;
    let reference = reference_state(cfg.n, mode.encoding()).map_err(|e| CliError::runtime("reference state", e))?;
    pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|run| {
                let state = engine.initial_state()?;
                engine.prepare_from(state, &reference, cfg.seed.wrapping_add(run as u64))
            })
            .collect::<Result<Vec<_>, _>>()
    })
    .map_err(|e| CliError::runtime("trajectory", e))
}

/// Columns: `run_id,r,F_tot,min_partial,corrections`.
pub fn trajectory_table(records: &[TrajectoryRecord]) -> Table {
    let mut table = Table::new(vec!["run_id", "r", "F_tot", "min_partial", "corrections"]);
    for (run, rec) in records.iter().enumerate() {
        for r in 0..=rec.rounds() {
            let min_partial = rec.partial_fidelity[r].iter().copied().fold(f64::INFINITY, f64::min);
            table.push(vec![
                json!(run),
                json!(r),
                json!(rec.fidelity[r]),
                json!(min_partial),
                json!(rec.corrections[r]),
            ]);
        }
    }
    table
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Median where `None` counts as larger than every value. `None` when the
/// middle falls among the missing entries.
pub fn median_with_missing(values: &[Option<usize>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.map_or(f64::INFINITY, |r| r as f64)).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    m.is_finite().then_some(m)
}

/// Value at round `r`, holding the last entry for early-stopped runs.
fn held<T: Copy>(series: &[T], r: usize) -> T {
    series[r.min(series.len() - 1)]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub sites: usize,
    pub mode: Mode,
    pub runs: usize,
    pub threshold: f64,
    pub noise: Option<NoiseSpec>,
    pub level: f64,
    /// Mean and std over runs of `F_tot` at rounds `0..=r_max`; runs that
    /// stopped early carry their last value forward.
    pub mean_fidelity: Vec<f64>,
    pub std_fidelity: Vec<f64>,
    pub mean_min_partial: Vec<f64>,
    pub mean_corrections: Vec<f64>,
    pub final_mean_fidelity: f64,
    pub final_std_fidelity: f64,
    /// Mean `F_tot` over rounds `1..=early_rounds`.
    pub early_mean_fidelity: f64,
    pub rounds_to_level: Vec<Option<usize>>,
    pub median_rounds_to_level: Option<f64>,
    pub unreached: usize,
    /// Crossing of the mean curve, interpolated.
    pub r_c: Option<f64>,
    /// Pooled mean of `|E_peak|` over recorded rounds `r >= late_from`.
    pub mean_abs_peak_late: Option<f64>,
    pub late_peak_samples: usize,
    /// Per bond, mean partial fidelity after its `T`-th measurement (index
    /// `T-1`), when measurement tracking is on.
    pub bond_partial_curves: Option<Vec<Vec<f64>>>,
    /// Smallest `T` with every bond's mean at or above `level`.
    pub measurements_to_level: Option<usize>,
    /// Largest `|w - 1|` of the symmetric-sector weight (qubit mode).
    pub max_symmetric_deviation: Option<f64>,
}

impl TrajectorySummary {
    pub fn from_records(
        records: &[TrajectoryRecord],
        cfg: &ExperimentConfig,
        settings: &SummarySettings,
    ) -> Self {
        let r_max = cfg.mite.r_max;
        let level = settings.level;
        let across = |f: &dyn Fn(&TrajectoryRecord, usize) -> f64| -> Vec<(f64, f64)> {
            (0..=r_max)
                .map(|r| mean_std(&records.iter().map(|rec| f(rec, r)).collect::<Vec<_>>()))
                .collect()
        };
        let fid = across(&|rec, r| held(&rec.fidelity, r));
        let min_partial = across(&|rec, r| {
            let row = &rec.partial_fidelity[r.min(rec.rounds())];
            row.iter().copied().fold(f64::INFINITY, f64::min)
        });
        let corrections = across(&|rec, r| held(&rec.corrections, r) as f64);
        let mean_fidelity: Vec<f64> = fid.iter().map(|p| p.0).collect();

        let early: Vec<f64> = records
            .iter()
            .flat_map(|rec| (1..=settings.early_rounds.min(r_max)).map(move |r| held(&rec.fidelity, r)))
            .collect();

        let rounds_to_level: Vec<Option<usize>> = records.iter().map(|r| r.first_round_reaching(level)).collect();

        let late: Vec<f64> = records
            .iter()
            .flat_map(|rec| rec.peak_energy.iter().enumerate().skip(settings.late_from))
            .filter_map(|(_, p)| p.map(f64::abs))
            .collect();

        let (bond_partial_curves, measurements_to_level) = if cfg.mite.track_measurements {
            let curves: Vec<Vec<f64>> = (0..cfg.n)
                .map(|b| {
                    let series: Vec<&Vec<f64>> = records
                        .iter()
                        .map(|rec| &rec.bond_measurement_fidelity[b])
                        .filter(|s| !s.is_empty())
                        .collect();
                    let len = series.iter().map(|s| s.len()).max().unwrap_or(0);
                    (0..len)
                        .map(|t| mean_std(&series.iter().map(|s| held(s, t)).collect::<Vec<_>>()).0)
                        .collect()
                })
                .collect();
            let len = curves.iter().map(|c| c.len()).min().unwrap_or(0);
            let first = (0..len).find(|&t| curves.iter().all(|c| c[t] >= level)).map(|t| t + 1);
            (Some(curves), first)
        } else {
            (None, None)
        };

        let max_symmetric_deviation = (cfg.mode == Mode::Qubit).then(|| {
            records
                .iter()
                .flat_map(|rec| rec.symmetric_weight.iter())
                .map(|w| (w - 1.0).abs())
                .fold(0.0, f64::max)
        });

        let last = fid.last().copied().unwrap_or((f64::NAN, f64::NAN));
        TrajectorySummary {
            sites: cfg.n,
            mode: cfg.mode,
            runs: records.len(),
            threshold: cfg.mite.threshold(),
            noise: cfg.mite.noise,
            level,
            r_c: critical_rounds(&mean_fidelity, 0.0, level).ok(),
            std_fidelity: fid.iter().map(|p| p.1).collect(),
            mean_min_partial: min_partial.iter().map(|p| p.0).collect(),
            mean_corrections: corrections.iter().map(|p| p.0).collect(),
            final_mean_fidelity: last.0,
            final_std_fidelity: last.1,
            early_mean_fidelity: mean_std(&early).0,
            median_rounds_to_level: median_with_missing(&rounds_to_level),
            unreached: rounds_to_level.iter().filter(|r| r.is_none()).count(),
            rounds_to_level,
            mean_abs_peak_late: (!late.is_empty()).then(|| mean_std(&late).0),
            late_peak_samples: late.len(),
            bond_partial_curves,
            measurements_to_level,
            max_symmetric_deviation,
            mean_fidelity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalRound {
    pub n: usize,
    pub r_c: Option<f64>,
    pub final_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectSummary {
    pub start: ProjectionStart,
    pub level: f64,
    pub rounds: usize,
    pub critical: Vec<CriticalRound>,
    /// `max r_c / min r_c` over the chains that crossed.
    pub spread: Option<f64>,
}

/// Deterministic projection for every configured chain length. Columns:
/// `N,r,F_tot`.
pub fn run_project(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<(Table, ProjectSummary), CliError> {
    let p = &cfg.project;
    let series: Vec<Vec<f64>> = pool
        .install(|| {
            p.sites
                .par_iter()
                .map(|&n| {
                    let reference = aklt_state(n)?;
                    direct_projection_series(&reference, p.start, p.rounds)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(|e| CliError::runtime("projection", e))?;

    let mut table = Table::new(vec!["N", "r", "F_tot"]);
    let mut critical = Vec::new();
    for (&n, s) in p.sites.iter().zip(&series) {
        for (r, f) in s.iter().enumerate() {
            table.push(vec![json!(n), json!(r), json!(f)]);
        }
        critical.push(CriticalRound {
            n,
            r_c: critical_rounds(s, 0.0, p.level).ok(),
            final_fidelity: *s.last().expect("series holds the start"),
        });
    }
    let crossed: Vec<f64> = critical.iter().filter_map(|c| c.r_c).collect();
    let spread = (crossed.len() == critical.len()).then(|| {
        let max = crossed.iter().copied().fold(f64::MIN, f64::max);
        let min = crossed.iter().copied().fold(f64::MAX, f64::min);
        max / min
    });
    Ok((
        table,
        ProjectSummary {
            start: p.start,
            level: p.level,
            rounds: p.rounds,
            critical,
            spread,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthSummary {
    pub n_layers: usize,
    pub cnot_count: usize,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub max_fidelity: f64,
    pub failed: usize,
    pub best_repetition: Option<usize>,
    pub best_params: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecompileSummary {
    pub epsilon: f64,
    /// Depth below which an exact circuit cannot exist, from operator
    /// Schmidt ranks of the target.
    pub min_layers_for_exact: usize,
    pub depths: Vec<DepthSummary>,
}

/// Every `(depth, repetition)` pair as an independent task. Columns:
/// `n_L,repetition,final_fidelity,hops_used`.
pub fn run_recompile(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<(Table, RecompileSummary), CliError> {
    let rc = &cfg.recompile;
    let target = target_unitary(rc.epsilon);
    let tasks: Vec<(usize, usize)> = rc
        .layers
        .iter()
        .flat_map(|&n| (0..cfg.runs).map(move |rep| (n, rep)))
        .collect();
    let results: Vec<RepetitionResult> = pool
        .install(|| {
            tasks
                .par_iter()
                .map(|&(n, rep)| optimize_repetition(&target, n, &rc.optimizer, rep))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(|e| CliError::runtime("recompile", e))?;

    let mut table = Table::new(vec!["n_L", "repetition", "final_fidelity", "hops_used"]);
    for r in &results {
        table.push(vec![json!(r.n_layers), json!(r.repetition), json!(r.fidelity), json!(r.hops_used)]);
    }
    let depths = results
        .chunks(cfg.runs)
        .zip(&rc.layers)
        .map(|(chunk, &n)| {
            let report = RecompileReport::from_results(rc.epsilon, n, chunk.to_vec());
            let best = report.best();
            DepthSummary {
                n_layers: n,
                cnot_count: report.cnot_count,
                mean_fidelity: report.mean_fidelity,
                std_fidelity: report.std_fidelity,
                max_fidelity: report.max_fidelity,
                failed: report.results.iter().filter(|r| r.failed).count(),
                best_repetition: best.map(|b| b.repetition),
                best_params: best.map(|b| b.params.clone()),
            }
        })
        .collect();
    let min_layers = min_layers_for_exact(&target.matrix).map_err(|e| CliError::runtime("schmidt rank", e))?;
    Ok((
        table,
        RecompileSummary {
            epsilon: rc.epsilon,
            min_layers_for_exact: min_layers,
            depths,
        },
    ))
}
