//! Variational recompilation of the five-qubit weak-measurement unitary
//! `exp(-i eps P (x) Y)` into layers of U3 gates and nearest-neighbour CNOTs.
//!
//! Qubits are numbered 1..=5 from the slowest index: qubits 1-4 are the two
//! qubit-pair sites of a bond, qubit 5 is the ancilla.

use std::cell::RefCell;
use std::f64::consts::TAU;

use argmin::core::{CostFunction, Executor, Gradient};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{identity, kron, trace, CMatrix, C64, ZERO};
use crate::spin::{BondMode, BondProjector};

pub const QUBITS: usize = 5;
pub const DIM: usize = 1 << QUBITS;

/// U3 gate in the Qiskit convention.
pub fn u3(theta: f64, phi: f64, lambda: f64) -> CMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::from(c),
            -C64::from_polar(s, lambda),
            C64::from_polar(s, phi),
            C64::from_polar(c, phi + lambda),
        ],
    )
}

/// Partial derivatives of [`u3`] with respect to `(theta, phi, lambda)`.
fn u3_derivatives(theta: f64, phi: f64, lambda: f64) -> [[C64; 4]; 3] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let i = C64::i();
    [
        [
            C64::from(-s / 2.0),
            -C64::from_polar(c / 2.0, lambda),
            C64::from_polar(c / 2.0, phi),
            -C64::from_polar(s / 2.0, phi + lambda),
        ],
        [
            ZERO,
            ZERO,
            i * C64::from_polar(s, phi),
            i * C64::from_polar(c, phi + lambda),
        ],
        [
            ZERO,
            -i * C64::from_polar(s, lambda),
            ZERO,
            i * C64::from_polar(c, phi + lambda),
        ],
    ]
}

fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -C64::i(), C64::i(), ZERO])
}

/// The measurement unitary on a bond of qubit-pair sites plus an ancilla.
#[derive(Debug, Clone)]
pub struct TargetUnitary {
    pub matrix: CMatrix,
    pub epsilon: f64,
}

/// `I + (cos eps - 1)(P (x) I) - i sin eps (P (x) Y)`, which is the
/// exponential because `(P (x) Y)^2 = P (x) I`.
pub fn target_unitary(epsilon: f64) -> TargetUnitary {
    let p = BondProjector::new(BondMode::QubitMapped).matrix;
    let p_i = kron(&p, &identity(2));
    let p_y = kron(&p, &pauli_y());
    let matrix = identity(DIM) + p_i * C64::from(epsilon.cos() - 1.0)
        - p_y * C64::new(0.0, epsilon.sin());
    TargetUnitary { matrix, epsilon }
}

/// The generator `P (x) Y` of the target.
pub fn target_generator() -> CMatrix {
    kron(&BondProjector::new(BondMode::QubitMapped).matrix, &pauli_y())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    /// U3 on `qubit` with angles at `params[offset..offset + 3]`.
    U3 { qubit: usize, offset: usize },
    Cnot { control: usize, target: usize },
}

/// Layered ansatz: five U3 gates, then per layer a CNOT pattern followed by
/// five U3 gates. Odd layers use CNOTs on (1,2),(3,4), even layers on
/// (2,3),(4,5).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCircuit {
    pub n_layers: usize,
    pub params: Vec<f64>,
}

impl ParamCircuit {
    pub fn new(n_layers: usize, params: Vec<f64>) -> Result<Self> {
        let expected = Self::param_count(n_layers);
        if params.len() != expected {
            return Err(Error::ParamLength {
                expected,
                actual: params.len(),
            });
        }
        Ok(ParamCircuit { n_layers, params })
    }

    pub fn zeros(n_layers: usize) -> Self {
        ParamCircuit {
            n_layers,
            params: vec![0.0; Self::param_count(n_layers)],
        }
    }

    pub fn param_count(n_layers: usize) -> usize {
        3 * QUBITS * (1 + n_layers)
    }

    pub fn cnot_count(&self) -> usize {
        gates(self.n_layers)
            .iter()
            .filter(|g| matches!(g, Gate::Cnot { .. }))
            .count()
    }

    pub fn unitary(&self) -> Result<CMatrix> {
        circuit_unitary(self)
    }
}

/// CNOT (control, target) pairs of layer `layer` (1-based).
pub fn cnot_bonds(layer: usize) -> [(usize, usize); 2] {
    if layer % 2 == 1 {
        [(1, 2), (3, 4)]
    } else {
        [(2, 3), (4, 5)]
    }
}

/// Gates in application order.
pub fn gates(n_layers: usize) -> Vec<Gate> {
    let mut out = Vec::with_capacity(QUBITS * (1 + n_layers) + 2 * n_layers);
    let mut offset = 0;
    let mut u3_layer = |out: &mut Vec<Gate>| {
        for qubit in 1..=QUBITS {
            out.push(Gate::U3 { qubit, offset });
            offset += 3;
        }
    };
    u3_layer(&mut out);
    for layer in 1..=n_layers {
        for (control, target) in cnot_bonds(layer) {
            out.push(Gate::Cnot { control, target });
        }
        u3_layer(&mut out);
    }
    out
}

fn mask(qubit: usize) -> usize {
    1 << (QUBITS - qubit)
}

/// `m <- G m` for a single-qubit gate `g` on `qubit`.
fn left_apply_1q(m: &mut CMatrix, g: [C64; 4], qubit: usize) {
    let bit = mask(qubit);
    let cols = m.ncols();
    for r0 in (0..DIM).filter(|r| r & bit == 0) {
        let r1 = r0 | bit;
        for c in 0..cols {
            let (a, b) = (m[(r0, c)], m[(r1, c)]);
            m[(r0, c)] = g[0] * a + g[1] * b;
            m[(r1, c)] = g[2] * a + g[3] * b;
        }
    }
}

/// `m <- CNOT m`: swaps rows that differ in the target bit when the control
/// bit is set. CNOT is its own inverse and adjoint.
fn left_apply_cnot(m: &mut CMatrix, control: usize, target: usize) {
    let (cb, tb) = (mask(control), mask(target));
    for r in (0..DIM).filter(|r| r & cb != 0 && r & tb == 0) {
        m.swap_rows(r, r | tb);
    }
}

fn gate_entries(params: &[f64], offset: usize) -> [C64; 4] {
    let g = u3(params[offset], params[offset + 1], params[offset + 2]);
    [g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]]
}

fn adjoint2(g: [C64; 4]) -> [C64; 4] {
    [g[0].conj(), g[2].conj(), g[1].conj(), g[3].conj()]
}

/// The 32x32 unitary of the circuit.
pub fn circuit_unitary(circuit: &ParamCircuit) -> Result<CMatrix> {
    let expected = ParamCircuit::param_count(circuit.n_layers);
    if circuit.params.len() != expected {
        return Err(Error::ParamLength {
            expected,
            actual: circuit.params.len(),
        });
    }
    let mut m = identity(DIM);
    for gate in gates(circuit.n_layers) {
        match gate {
            Gate::U3 { qubit, offset } => {
                left_apply_1q(&mut m, gate_entries(&circuit.params, offset), qubit)
            }
            Gate::Cnot { control, target } => left_apply_cnot(&mut m, control, target),
        }
    }
    Ok(m)
}

/// `|Tr(V^dag U)| / d`.
pub fn fidelity(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    if u.shape() != v.shape() || u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            actual: v.nrows(),
        });
    }
    Ok((trace(&(v.adjoint() * u)).norm() / u.nrows() as f64).min(1.0))
}

/// Operator Schmidt rank of a 5-qubit operator across the cut between
/// qubits `1..=left` and the rest. Each CNOT crossing the cut can at most
/// double it.
pub fn operator_schmidt_rank(m: &CMatrix, left: usize) -> Result<usize> {
    if m.shape() != (DIM, DIM) || left == 0 || left >= QUBITS {
        return Err(Error::DimensionMismatch {
            expected: DIM,
            actual: m.nrows(),
        });
    }
    let da = 1 << left;
    let db = DIM / da;
    let reshaped = CMatrix::from_fn(da * da, db * db, |row, col| {
        let (a, a2) = (row / da, row % da);
        let (b, b2) = (col / db, col % db);
        m[(a * db + b, a2 * db + b2)]
    });
    let singular = reshaped.singular_values();
    let top = singular.iter().copied().fold(0.0, f64::max);
    Ok(singular.iter().filter(|&&s| s > 1e-10 * top).count())
}

/// CNOTs of an `n_layers` circuit that straddle the cut after qubit `left`.
pub fn cnots_across_cut(n_layers: usize, left: usize) -> usize {
    gates(n_layers)
        .iter()
        .filter(|g| match g {
            Gate::Cnot { control, target } => control.min(target) <= &left && control.max(target) > &left,
            _ => false,
        })
        .count()
}

/// Smallest layer count whose CNOT pattern leaves room, on every cut, for
/// the operator Schmidt rank of `target`.
pub fn min_layers_for_exact(target: &CMatrix) -> Result<usize> {
    let ranks = (1..QUBITS)
        .map(|left| operator_schmidt_rank(target, left))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..)
        .find(|&n| {
            ranks
                .iter()
                .enumerate()
                .all(|(i, &r)| (1usize << cnots_across_cut(n, i + 1).min(usize::BITS as usize - 1)) >= r)
        })
        .expect("unbounded search"))
}

/// Loss `1 - fidelity(target, circuit(params))` for a fixed layer count.
#[derive(Debug, Clone)]
pub struct Objective {
    pub target: CMatrix,
    pub n_layers: usize,
    gates: Vec<Gate>,
}

impl Objective {
    pub fn new(target: CMatrix, n_layers: usize) -> Self {
        Objective {
            target,
            n_layers,
            gates: gates(n_layers),
        }
    }

    fn check(&self, params: &[f64]) -> Result<()> {
        let expected = ParamCircuit::param_count(self.n_layers);
        if params.len() != expected {
            return Err(Error::ParamLength {
                expected,
                actual: params.len(),
            });
        }
        Ok(())
    }

    fn overlap(&self, params: &[f64]) -> Result<C64> {
        let v = circuit_unitary(&ParamCircuit::new(self.n_layers, params.to_vec())?)?;
        Ok(trace(&(v.adjoint() * &self.target)))
    }

    pub fn loss(&self, params: &[f64]) -> Result<f64> {
        Ok(1.0 - self.overlap(params)?.norm() / DIM as f64)
    }

    /// Loss and its gradient from one forward and one backward sweep.
    pub fn loss_and_gradient(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(params)?;
        // prefix[k] is the product of the gates before gate k.
        let mut prefix = Vec::with_capacity(self.gates.len());
        let mut m = identity(DIM);
        for gate in &self.gates {
            prefix.push(m.clone());
            match *gate {
                Gate::U3 { qubit, offset } => {
                    left_apply_1q(&mut m, gate_entries(params, offset), qubit)
                }
                Gate::Cnot { control, target } => left_apply_cnot(&mut m, control, target),
            }
        }
        let f = trace(&(m.adjoint() * &self.target));
        let abs_f = f.norm();
        let loss = 1.0 - abs_f / DIM as f64;
        let mut grad = vec![0.0; params.len()];
        if abs_f == 0.0 {
            return Ok((loss, grad));
        }

        // w = (gates after k)^dag U, walked from the end.
        let mut w = self.target.clone();
        for (k, gate) in self.gates.iter().enumerate().rev() {
            match *gate {
                Gate::U3 { qubit, offset } => {
                    let env = environment(&w, &prefix[k], qubit);
                    let derivs = u3_derivatives(params[offset], params[offset + 1], params[offset + 2]);
                    for (p, dg) in derivs.iter().enumerate() {
                        let df: C64 = dg.iter().zip(env.iter()).map(|(d, e)| d.conj() * e).sum();
                        grad[offset + p] = -(f.conj() * df).re / (abs_f * DIM as f64);
                    }
                    left_apply_1q(&mut w, adjoint2(gate_entries(params, offset)), qubit);
                }
                Gate::Cnot { control, target } => left_apply_cnot(&mut w, control, target),
            }
        }
        Ok((loss, grad))
    }

    pub fn gradient(&self, params: &[f64]) -> Result<Vec<f64>> {
        Ok(self.loss_and_gradient(params)?.1)
    }
}

/// `env[a][b] = sum_{rest, c} W[(a, rest), c] conj(B[(b, rest), c])` for the
/// qubit `qubit`, flattened row-major.
fn environment(w: &CMatrix, b: &CMatrix, qubit: usize) -> [C64; 4] {
    let bit = mask(qubit);
    let mut env = [ZERO; 4];
    for r in (0..DIM).filter(|r| r & bit == 0) {
        let rows = [r, r | bit];
        for (ai, &ra) in rows.iter().enumerate() {
            for (bi, &rb) in rows.iter().enumerate() {
                let mut acc = ZERO;
                for c in 0..DIM {
                    acc += w[(ra, c)] * b[(rb, c)].conj();
                }
                env[2 * ai + bi] += acc;
            }
        }
    }
    env
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iters: u64,
    pub hops: usize,
    pub hop_scale: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub memory: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 100,
            hops: 5,
            hop_scale: 0.3,
            repetitions: 100,
            seed: 0,
            memory: 10,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.memory == 0 {
            return Err(Error::InvalidConfig("max_iters and memory must be positive".into()));
        }
        if !(self.hop_scale >= 0.0 && self.hop_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("bad hop scale {}", self.hop_scale)));
        }
        Ok(())
    }

    /// Seed of repetition `rep` at depth `n_layers`.
    pub fn repetition_seed(&self, n_layers: usize, rep: usize) -> u64 {
        self.seed
            .wrapping_add((n_layers as u64) << 32)
            .wrapping_add(rep as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub n_layers: usize,
    pub repetition: usize,
    pub fidelity: f64,
    pub iterations: u64,
    pub hops_used: usize,
    pub hops_accepted: usize,
    pub failed: bool,
    pub params: Vec<f64>,
}

/// Objective plus a record of the best point evaluated so far, so that an
/// aborted local search still yields its progress.
struct TrackedProblem<'a> {
    objective: &'a Objective,
    best: &'a RefCell<(f64, Vec<f64>)>,
    non_finite: &'a RefCell<bool>,
}

impl TrackedProblem<'_> {
    fn note(&self, params: &[f64], loss: f64) {
        if !loss.is_finite() {
            *self.non_finite.borrow_mut() = true;
            return;
        }
        let mut best = self.best.borrow_mut();
        if loss < best.0 {
            *best = (loss, params.to_vec());
        }
    }
}

fn to_argmin(e: Error) -> argmin::core::Error {
    argmin::core::Error::msg(e.to_string())
}

impl CostFunction for TrackedProblem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, params: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let loss = self.objective.loss(params).map_err(to_argmin)?;
        self.note(params, loss);
        if !loss.is_finite() {
            return Err(argmin::core::Error::msg("non-finite loss"));
        }
        Ok(loss)
    }
}

impl Gradient for TrackedProblem<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, params: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let (loss, grad) = self.objective.loss_and_gradient(params).map_err(to_argmin)?;
        self.note(params, loss);
        Ok(grad)
    }
}

fn wrap(params: &mut [f64]) {
    params.iter_mut().for_each(|p| *p = p.rem_euclid(TAU));
}

/// Local quasi-Newton search from `start`. Returns the best point seen,
/// wrapped into `[0, 2 pi)`, its loss, the iteration count, and whether a
/// non-finite loss occurred.
pub fn local_minimize(
    objective: &Objective,
    start: &[f64],
    max_iters: u64,
    memory: usize,
) -> Result<(Vec<f64>, f64, u64, bool)> {
    let start_loss = objective.loss(start)?;
    let best = RefCell::new((start_loss, start.to_vec()));
    let non_finite = RefCell::new(!start_loss.is_finite());
    let problem = TrackedProblem {
        objective,
        best: &best,
        non_finite: &non_finite,
    };
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), memory)
        .with_tolerance_grad(1e-12)
        .and_then(|s| s.with_tolerance_cost(0.0))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let outcome = Executor::new(problem, solver)
        .configure(|state| state.param(start.to_vec()).max_iters(max_iters))
        .run();
    let iterations = match &outcome {
        Ok(res) => res.state().iter,
        Err(_) => 0,
    };
    let (loss, mut params) = best.into_inner();
    wrap(&mut params);
    Ok((params, loss, iterations, non_finite.into_inner()))
}

/// One repetition: random start in `[0, 2 pi)`, a local search, then
/// `hops` perturb-and-search steps that keep only improvements.
pub fn optimize_repetition(
    target: &TargetUnitary,
    n_layers: usize,
    config: &OptimizerConfig,
    repetition: usize,
) -> Result<RepetitionResult> {
    config.validate()?;
    let objective = Objective::new(target.matrix.clone(), n_layers);
    let mut rng = ChaCha8Rng::seed_from_u64(config.repetition_seed(n_layers, repetition));
    let count = ParamCircuit::param_count(n_layers);
    let start: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..TAU)).collect();

    let (mut best, mut best_loss, mut iterations, mut failed) =
        local_minimize(&objective, &start, config.max_iters, config.memory)?;
    let mut hops_used = 0;
    let mut hops_accepted = 0;
    for _ in 0..config.hops {
        if best_loss < 1e-14 {
            break;
        }
        let trial: Vec<f64> = best
            .iter()
            .map(|p| p + rng.random_range(-config.hop_scale..=config.hop_scale))
            .collect();
        let (params, loss, iters, bad) =
            local_minimize(&objective, &trial, config.max_iters, config.memory)?;
        hops_used += 1;
        iterations += iters;
        failed |= bad;
        if loss < best_loss {
            best = params;
            best_loss = loss;
            hops_accepted += 1;
        }
    }
    Ok(RepetitionResult {
        n_layers,
        repetition,
        fidelity: 1.0 - best_loss,
        iterations,
        hops_used,
        hops_accepted,
        failed,
        params: best,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecompileReport {
    pub epsilon: f64,
    pub n_layers: usize,
    pub results: Vec<RepetitionResult>,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub max_fidelity: f64,
    pub cnot_count: usize,
}

impl RecompileReport {
    /// Aggregates over the repetitions that did not fail.
    pub fn from_results(epsilon: f64, n_layers: usize, results: Vec<RepetitionResult>) -> Self {
        let good: Vec<f64> = results.iter().filter(|r| !r.failed).map(|r| r.fidelity).collect();
        let n = good.len().max(1) as f64;
        let mean = good.iter().sum::<f64>() / n;
        let var = good.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
        RecompileReport {
            epsilon,
            n_layers,
            mean_fidelity: mean,
            std_fidelity: var.sqrt(),
            max_fidelity: good.iter().copied().fold(f64::NAN, f64::max),
            cnot_count: ParamCircuit::zeros(n_layers).cnot_count(),
            results,
        }
    }

    pub fn best(&self) -> Option<&RepetitionResult> {
        self.results
            .iter()
            .filter(|r| !r.failed)
            .max_by(|a, b| a.fidelity.total_cmp(&b.fidelity))
    }
}

/// All repetitions at one depth, sequentially.
pub fn optimize(epsilon: f64, n_layers: usize, config: &OptimizerConfig) -> Result<RecompileReport> {
    let target = target_unitary(epsilon);
    let results = (0..config.repetitions)
        .map(|rep| optimize_repetition(&target, n_layers, config, rep))
        .collect::<Result<Vec<_>>>()?;
    Ok(RecompileReport::from_results(epsilon, n_layers, results))
}
