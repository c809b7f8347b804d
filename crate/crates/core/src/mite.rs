//! Measurement-based imaginary time evolution on bond pairs, the odd/even
//! sweep schedule, stochastic noise, and the deterministic projection
//! baseline.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, expm_i_hermitian, identity, kron, CMatrix, C64};
use crate::qubit;
use crate::spin::{AkltReference, Axis, BondMode, BondProjector, SpinMatrices};
use crate::state::{born_sample, fidelity, KrausPair, LocalKet, StateVector};

/// Which outcomes feed the peak-energy estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CounterScope {
    /// One count pair for the whole chain, kept across bonds and rounds.
    #[default]
    Chain,
    /// One count pair per bond, kept across rounds.
    Bond,
    /// Fresh counts at the start of every subroutine.
    Subroutine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub axis: Axis,
    /// Width parameter of the density `exp(-xi^2 / sigma2)`.
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiteConfig {
    pub epsilon: f64,
    pub eta: f64,
    pub n_iter: usize,
    pub r_max: usize,
    pub window: usize,
    pub noise: Option<NoiseSpec>,
    pub seed: u64,
    pub counter_scope: CounterScope,
    /// Keep only the most recent outcomes in each counter.
    pub counter_memory: Option<usize>,
    /// Stop once the total fidelity exceeds `1 - early_stop`.
    pub early_stop: Option<f64>,
    /// Record the bond partial fidelity after every measurement.
    pub track_measurements: bool,
}

impl Default for MiteConfig {
    fn default() -> Self {
        MiteConfig::for_mode(BondMode::Spin1)
    }
}

impl MiteConfig {
    pub fn for_mode(mode: BondMode) -> Self {
        MiteConfig {
            epsilon: 0.5,
            eta: match mode {
                BondMode::Spin1 => 4.0,
                BondMode::QubitMapped => 2.0,
            },
            n_iter: 30,
            r_max: 100,
            window: 30,
            noise: None,
            seed: 0,
            counter_scope: CounterScope::Chain,
            counter_memory: None,
            early_stop: Some(1e-6),
            track_measurements: false,
        }
    }

    /// `E_th = epsilon / eta`.
    pub fn threshold(&self) -> f64 {
        self.epsilon / self.eta
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if self.threshold() >= 0.5 {
            return bad(format!(
                "threshold epsilon/eta = {} must lie below the midpoint 1/2",
                self.threshold()
            ));
        }
        if self.window < 1 || self.n_iter < self.window {
            return bad(format!(
                "need n_iter >= window >= 1, got n_iter={} window={}",
                self.n_iter, self.window
            ));
        }
        if let Some(noise) = &self.noise {
            if !(noise.sigma2 >= 0.0 && noise.sigma2.is_finite()) {
                return bad(format!("noise sigma2 must be >= 0, got {}", noise.sigma2));
            }
            if noise.axis == Axis::Y {
                return bad("noise axis must be x or z".into());
            }
        }
        if self.counter_memory == Some(0) {
            return bad("counter_memory must be positive".into());
        }
        if let Some(tol) = self.early_stop {
            if !(0.0..1.0).contains(&tol) {
                return bad(format!("early_stop tolerance must be in [0, 1), got {tol}"));
            }
        }
        Ok(())
    }
}

/// Weak-measurement Kraus pair for one bond:
/// `M_q = [I + (cos eps - 1 - (-1)^q sin eps) P] / sqrt(2)`.
///
/// The `1/sqrt(2)` prefactor makes the pair complete.
pub fn measurement_kraus(epsilon: f64, projector: &BondProjector) -> Result<KrausPair> {
    let defect = projector.idempotency_defect();
    if defect > 1e-10 {
        return Err(Error::NotIdempotent { defect });
    }
    Ok(kraus_with_prefactor(epsilon, projector, std::f64::consts::FRAC_1_SQRT_2))
}

/// Kraus pair with an arbitrary overall prefactor. Only `1/sqrt(2)` gives a
/// complete pair; other values exist for fault injection.
pub fn kraus_with_prefactor(epsilon: f64, projector: &BondProjector, prefactor: f64) -> KrausPair {
    let id = identity(projector.dim());
    let (cos, sin) = (epsilon.cos(), epsilon.sin());
    let build = |sign: f64| {
        (&id + &projector.matrix * C64::from(cos - 1.0 - sign * sin)) * C64::from(prefactor)
    };
    KrausPair {
        m0: build(1.0),
        m1: build(-1.0),
    }
}

/// `(1 / 2 eps) arcsin((k1 - k0) / (k0 + k1))`.
pub fn peak_energy(k0: u64, k1: u64, epsilon: f64) -> Result<f64> {
    let n = k0 + k1;
    if n == 0 {
        return Err(Error::EmptyCounter);
    }
    let ratio = (k1 as f64 - k0 as f64) / n as f64;
    Ok(ratio.asin() / (2.0 * epsilon))
}

/// Log-magnitude of the accumulated amplitude on an eigenstate with
/// `chi = eps * E`, from the Kraus eigenvalues `cos(chi + pi/4)` (q = 0) and
/// `sin(chi + pi/4)` (q = 1). Diagnostic only.
pub fn log_amplitude(k0: u64, k1: u64, chi: f64) -> f64 {
    let theta = chi + FRAC_PI_4;
    let term = |k: u64, v: f64| if k == 0 { 0.0 } else { k as f64 * v.abs().ln() };
    term(k0, theta.cos()) + term(k1, theta.sin())
}

/// Outcome counts since the last correction, optionally limited to the most
/// recent `memory` outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MeasurementCounter {
    pub k0: u64,
    pub k1: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory: Option<usize>,
    #[serde(skip)]
    history: VecDeque<u8>,
}

impl MeasurementCounter {
    pub fn with_memory(memory: Option<usize>) -> Self {
        MeasurementCounter {
            memory,
            ..MeasurementCounter::default()
        }
    }

    /// Counter pre-loaded with `k0` zeros and `k1` ones (unbounded memory).
    pub fn with_counts(k0: u64, k1: u64) -> Self {
        MeasurementCounter {
            k0,
            k1,
            ..MeasurementCounter::default()
        }
    }

    pub fn record(&mut self, outcome: u8) {
        if outcome == 0 {
            self.k0 += 1;
        } else {
            self.k1 += 1;
        }
        if let Some(memory) = self.memory {
            self.history.push_back(outcome);
            if self.history.len() > memory {
                match self.history.pop_front() {
                    Some(0) => self.k0 -= 1,
                    Some(_) => self.k1 -= 1,
                    None => {}
                }
            }
        }
    }

    pub fn reset(&mut self) {
        self.k0 = 0;
        self.k1 = 0;
        self.history.clear();
    }

    pub fn total(&self) -> u64 {
        self.k0 + self.k1
    }

    pub fn peak(&self, epsilon: f64) -> Option<f64> {
        peak_energy(self.k0, self.k1, epsilon).ok()
    }
}

/// `exp[2 pi i a.S] (x) exp[2 pi i b.S]` for the six coefficients
/// `(a_x, a_y, a_z, b_x, b_y, b_z)`.
pub fn correction_unitary_from(spins: &SpinMatrices, coeffs: [f64; 6]) -> CMatrix {
    let left = expm_i_hermitian(
        &spins.linear_combination([coeffs[0], coeffs[1], coeffs[2]]),
        2.0 * PI,
    );
    let right = expm_i_hermitian(
        &spins.linear_combination([coeffs[3], coeffs[4], coeffs[5]]),
        2.0 * PI,
    );
    kron(&left, &right)
}

/// Random local rotations on both sites of a bond.
pub fn correction_unitary<R: Rng + ?Sized>(spins: &SpinMatrices, rng: &mut R) -> CMatrix {
    let mut coeffs = [0.0; 6];
    coeffs.iter_mut().for_each(|a| *a = rng.random::<f64>());
    correction_unitary_from(spins, coeffs)
}

/// `prod_j exp[i xi_j S_j^axis]` with `xi_j` drawn from a density
/// proportional to `exp(-xi^2 / sigma2)`, i.e. variance `sigma2 / 2`.
/// With `sigma2 == 0` nothing is drawn.
pub fn apply_noise<R: Rng + ?Sized>(
    state: &mut StateVector,
    spins: &SpinMatrices,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<()> {
    if noise.sigma2 == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, (noise.sigma2 / 2.0).sqrt())
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let generator = spins.component(noise.axis);
    for site in 0..state.sites() {
        let xi = normal.sample(rng);
        state.apply_one_site(&expm_i_hermitian(generator, xi), site)?;
    }
    Ok(())
}

/// Bonds of one sweep: odd bonds `(1,2), (3,4), ...` first, then the even
/// ones, as 0-based bond indices (bond `j` joins sites `j` and `j+1 mod n`).
pub fn sweep_order(sites: usize) -> Vec<usize> {
    (0..sites).step_by(2).chain((1..sites).step_by(2)).collect()
}

/// One measurement inside a subroutine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementStep {
    pub outcome: u8,
    /// Counts including this outcome, before any reset.
    pub k0: u64,
    pub k1: u64,
    pub peak: f64,
    pub corrected: bool,
    /// Partial fidelity of the bond after the step (when tracked).
    pub partial_fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubroutineStats {
    pub bond: usize,
    pub measurements: usize,
    pub corrections: usize,
    pub converged: bool,
    pub steps: Vec<MeasurementStep>,
}

/// Counters for every bond under the configured scope.
#[derive(Debug, Clone)]
pub struct CounterBank {
    scope: CounterScope,
    counters: Vec<MeasurementCounter>,
}

impl CounterBank {
    pub fn new(scope: CounterScope, bonds: usize, memory: Option<usize>) -> Self {
        let len = match scope {
            CounterScope::Chain => 1,
            _ => bonds,
        };
        CounterBank {
            scope,
            counters: vec![MeasurementCounter::with_memory(memory); len],
        }
    }

    pub fn scope(&self) -> CounterScope {
        self.scope
    }

    fn slot(&self, bond: usize) -> usize {
        match self.scope {
            CounterScope::Chain => 0,
            _ => bond,
        }
    }

    pub fn get(&self, bond: usize) -> &MeasurementCounter {
        &self.counters[self.slot(bond)]
    }

    pub fn get_mut(&mut self, bond: usize) -> &mut MeasurementCounter {
        let i = self.slot(bond);
        &mut self.counters[i]
    }

    /// Chain peak energy, or the mean over bonds with recorded outcomes.
    pub fn summary_peak(&self, epsilon: f64) -> Option<f64> {
        let peaks: Vec<f64> = self.counters.iter().filter_map(|c| c.peak(epsilon)).collect();
        if peaks.is_empty() {
            None
        } else {
            Some(peaks.iter().sum::<f64>() / peaks.len() as f64)
        }
    }
}

/// Everything recorded along one state-preparation trajectory. Index `r` of
/// the per-round series is the state after `r` rounds (`r = 0` is the input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub sites: usize,
    pub mode: BondMode,
    pub seed: u64,
    pub fidelity: Vec<f64>,
    pub partial_fidelity: Vec<Vec<f64>>,
    pub peak_energy: Vec<Option<f64>>,
    /// Cumulative corrections after each round.
    pub corrections: Vec<u64>,
    /// Triplet-sector weight after each round (qubit mode only).
    pub symmetric_weight: Vec<f64>,
    pub subroutines: Vec<SubroutineStats>,
    /// Per bond: partial fidelity after its `T`-th measurement (index `T-1`),
    /// filled only when measurement tracking is on.
    pub bond_measurement_fidelity: Vec<Vec<f64>>,
}

impl TrajectoryRecord {
    pub fn rounds(&self) -> usize {
        self.fidelity.len() - 1
    }

    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().expect("record holds the initial fidelity")
    }

    /// First round index at which the fidelity reaches `level`.
    pub fn first_round_reaching(&self, level: f64) -> Option<usize> {
        self.fidelity.iter().position(|&f| f >= level)
    }
}

/// Operators and settings shared by every trajectory of one experiment.
#[derive(Debug, Clone)]
pub struct MiteEngine {
    pub config: MiteConfig,
    pub mode: BondMode,
    pub sites: usize,
    projector: BondProjector,
    complement: CMatrix,
    kraus: KrausPair,
    spins: SpinMatrices,
}

impl MiteEngine {
    pub fn new(config: MiteConfig, mode: BondMode, sites: usize) -> Result<Self> {
        config.validate()?;
        let max = match mode {
            BondMode::Spin1 => crate::spin::MAX_SPIN1_SITES,
            BondMode::QubitMapped => qubit::MAX_QUBIT_SITES,
        };
        if !(crate::spin::MIN_SITES..=max).contains(&sites) {
            return Err(Error::InvalidSiteCount {
                n: sites,
                min: crate::spin::MIN_SITES,
                max,
            });
        }
        let projector = BondProjector::new(mode);
        let kraus = measurement_kraus(config.epsilon, &projector)?;
        Ok(MiteEngine {
            complement: projector.complement(),
            spins: mode.site_spins(),
            config,
            mode,
            sites,
            projector,
            kraus,
        })
    }

    pub fn projector(&self) -> &BondProjector {
        &self.projector
    }

    pub fn kraus(&self) -> &KrausPair {
        &self.kraus
    }

    pub fn spins(&self) -> &SpinMatrices {
        &self.spins
    }

    /// Input state: every site spin-up (`|m=1>` or `|00>`).
    pub fn initial_state(&self) -> Result<StateVector> {
        StateVector::product(self.sites, self.mode.encoding(), &LocalKet::Index(0))
    }

    /// `<psi|(I - P_bond)|psi>`, clamped to `[0, 1]`.
    pub fn partial_fidelity(&self, state: &StateVector, bond: usize) -> Result<f64> {
        Ok(state
            .bond_expectation(&self.complement, bond)?
            .re
            .clamp(0.0, 1.0))
    }

    /// Measure-and-correct loop on one bond.
    ///
    /// After each outcome the peak energy of `counter` is compared with the
    /// threshold; at or above it a random correction is applied and the
    /// counter is cleared. The loop ends after `n_iter` measurements or after
    /// `window` consecutive in-threshold measurements.
    pub fn subroutine<R: Rng + ?Sized>(
        &self,
        state: &mut StateVector,
        bond: usize,
        counter: &mut MeasurementCounter,
        rng: &mut R,
    ) -> Result<SubroutineStats> {
        let eps = self.config.epsilon;
        let threshold = self.config.threshold();
        let mut stats = SubroutineStats {
            bond,
            measurements: 0,
            corrections: 0,
            converged: false,
            steps: Vec::with_capacity(self.config.n_iter),
        };
        let mut quiet = 0;
        for _ in 0..self.config.n_iter {
            let m = born_sample(&self.kraus, bond, state, rng)?;
            counter.record(m.outcome);
            stats.measurements += 1;
            let (k0, k1) = (counter.k0, counter.k1);
            let peak = peak_energy(k0, k1, eps)?;
            let corrected = peak >= threshold;
            if corrected {
                let u = correction_unitary(&self.spins, rng);
                state.apply_two_site(&u, bond)?;
                state.normalize();
                counter.reset();
                stats.corrections += 1;
                quiet = 0;
            } else {
                quiet += 1;
            }
            let partial_fidelity = if self.config.track_measurements {
                Some(self.partial_fidelity(state, bond)?)
            } else {
                None
            };
            stats.steps.push(MeasurementStep {
                outcome: m.outcome,
                k0,
                k1,
                peak,
                corrected,
                partial_fidelity,
            });
            if quiet >= self.config.window {
                stats.converged = true;
                break;
            }
        }
        Ok(stats)
    }

    /// Subroutines over the odd bonds, then the even bonds.
    pub fn sweep_round<R: Rng + ?Sized>(
        &self,
        state: &mut StateVector,
        counters: &mut CounterBank,
        rng: &mut R,
    ) -> Result<Vec<SubroutineStats>> {
        let mut out = Vec::with_capacity(self.sites);
        for bond in sweep_order(self.sites) {
            if counters.scope() == CounterScope::Subroutine {
                counters.get_mut(bond).reset();
            }
            out.push(self.subroutine(state, bond, counters.get_mut(bond), rng)?);
        }
        Ok(out)
    }

    /// Runs one trajectory from the all-up state with `config.seed`.
    pub fn prepare(&self, reference: &AkltReference) -> Result<TrajectoryRecord> {
        let state = self.initial_state()?;
        self.prepare_from(state, reference, self.config.seed)
    }

    pub fn prepare_from(
        &self,
        mut state: StateVector,
        reference: &AkltReference,
        seed: u64,
    ) -> Result<TrajectoryRecord> {
        if !reference.state.same_shape(&state) {
            return Err(Error::DimensionMismatch {
                expected: state.dim(),
                actual: reference.state.dim(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counters = CounterBank::new(self.config.counter_scope, self.sites, self.config.counter_memory);
        let eps = self.config.epsilon;
        let qubit_mode = self.mode == BondMode::QubitMapped;

        let mut record = TrajectoryRecord {
            sites: self.sites,
            mode: self.mode,
            seed,
            fidelity: Vec::with_capacity(self.config.r_max + 1),
            partial_fidelity: Vec::with_capacity(self.config.r_max + 1),
            peak_energy: Vec::with_capacity(self.config.r_max + 1),
            corrections: Vec::with_capacity(self.config.r_max + 1),
            symmetric_weight: Vec::new(),
            subroutines: Vec::new(),
            bond_measurement_fidelity: vec![Vec::new(); self.sites],
        };
        let mut total_corrections = 0u64;
        let observe = |state: &StateVector,
                           counters: &CounterBank,
                           total: u64,
                           record: &mut TrajectoryRecord|
         -> Result<()> {
            record.fidelity.push(fidelity(&reference.state, state)?);
            record.partial_fidelity.push(
                (0..self.sites)
                    .map(|b| self.partial_fidelity(state, b))
                    .collect::<Result<_>>()?,
            );
            record.peak_energy.push(counters.summary_peak(eps));
            record.corrections.push(total);
            if qubit_mode {
                record.symmetric_weight.push(qubit::symmetric_weight(state)?);
            }
            Ok(())
        };
        observe(&state, &counters, 0, &mut record)?;

        for _ in 0..self.config.r_max {
            if let Some(tol) = self.config.early_stop {
                if record.final_fidelity() > 1.0 - tol {
                    break;
                }
            }
            if let Some(noise) = self.config.noise.as_ref().filter(|n| n.sigma2 > 0.0) {
                apply_noise(&mut state, &self.spins, noise, &mut rng)?;
                state.normalize();
            }
            let stats = self.sweep_round(&mut state, &mut counters, &mut rng)?;
            for s in &stats {
                total_corrections += s.corrections as u64;
                if self.config.track_measurements {
                    record.bond_measurement_fidelity[s.bond]
                        .extend(s.steps.iter().filter_map(|st| st.partial_fidelity));
                }
            }
            record.subroutines.extend(stats);
            observe(&state, &counters, total_corrections, &mut record)?;
        }
        Ok(record)
    }
}

/// One trajectory for `(config, sites, mode)`, computing the reference state.
pub fn prepare(config: &MiteConfig, sites: usize, mode: BondMode) -> Result<TrajectoryRecord> {
    let engine = MiteEngine::new(config.clone(), mode, sites)?;
    let reference = qubit::reference_state(sites, mode.encoding())?;
    engine.prepare(&reference)
}

/// Spin-1 site state with `S^x = m` for `m` in `{-1, 0, 1}`, from
/// diagonalizing `S^x`, phased so its largest component is real positive.
pub fn sx_eigenstate_m(m: i8) -> Result<Vec<C64>> {
    if !(-1..=1).contains(&m) {
        return Err(Error::InvalidKet(format!("no S^x = {m} state for spin 1")));
    }
    let (_, vectors) = linalg::hermitian_eigen(&SpinMatrices::spin_one().x);
    let mut v: Vec<C64> = vectors.column((m + 1) as usize).iter().copied().collect();
    let lead = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("non-empty");
    let phase = lead.conj() / lead.norm();
    v.iter_mut().for_each(|z| *z *= phase);
    Ok(v)
}

/// Spin-1 site state with `S^x = +1`.
pub fn sx_eigenstate() -> Vec<C64> {
    sx_eigenstate_m(1).expect("valid eigenvalue")
}

/// Product of `S^x` eigenstates that seeds the deterministic projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionStart {
    /// `S^x = +1, -1, +1, ...`, with `S^x = 0` on the last site of an odd chain.
    #[default]
    XNeel,
    /// `S^x = +1` on every site. Every bond pair of this state is in the
    /// stretched S=2 multiplet, so the first projection annihilates it.
    XPolarized,
}

impl ProjectionStart {
    pub fn state(self, sites: usize) -> Result<StateVector> {
        let kets = (0..sites)
            .map(|j| {
                let m = match self {
                    ProjectionStart::XPolarized => 1,
                    ProjectionStart::XNeel if sites % 2 == 1 && j == sites - 1 => 0,
                    ProjectionStart::XNeel if j % 2 == 0 => 1,
                    ProjectionStart::XNeel => -1,
                };
                sx_eigenstate_m(m).map(LocalKet::Vector)
            })
            .collect::<Result<Vec<_>>>()?;
        StateVector::product_of(crate::state::SiteEncoding::Spin1, &kets)
    }
}

/// Relative norm below which a projected state is treated as annihilated.
pub const ANNIHILATION_TOL: f64 = 1e-12;

/// Fidelity with the AKLT state under repeated deterministic projection:
/// each round applies `I - P` on the odd bonds, then on the even bonds, and
/// renormalizes. Entry `r` is the fidelity after `r` rounds.
pub fn direct_projection_converge(sites: usize, r_max: usize) -> Result<Vec<f64>> {
    let reference = crate::spin::aklt_state(sites)?;
    direct_projection_series(&reference, ProjectionStart::default(), r_max)
}

pub fn direct_projection_series(
    reference: &AkltReference,
    start: ProjectionStart,
    r_max: usize,
) -> Result<Vec<f64>> {
    let complement = BondProjector::new(BondMode::Spin1).complement();
    let mut state = start.state(reference.sites)?;
    let mut series = vec![fidelity(&reference.state, &state)?];
    for _ in 0..r_max {
        for bond in sweep_order(reference.sites) {
            state.apply_two_site(&complement, bond)?;
        }
        if !(state.normalize() > ANNIHILATION_TOL) {
            return Err(Error::NormUnderflow);
        }
        series.push(fidelity(&reference.state, &state)?);
    }
    Ok(series)
}

/// Round at which `series` first reaches `level`, by linear interpolation
/// between neighbouring samples. `series[i]` is taken at round
/// `start_round + i`.
pub fn critical_rounds(series: &[f64], start_round: f64, level: f64) -> Result<f64> {
    let first = series
        .iter()
        .position(|&f| f >= level)
        .ok_or(Error::NeverCrosses { level })?;
    if first == 0 {
        return Ok(start_round);
    }
    let (lo, hi) = (series[first - 1], series[first]);
    let frac = (level - lo) / (hi - lo);
    Ok(start_round + (first - 1) as f64 + frac)
}
