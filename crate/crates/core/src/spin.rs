//! Spin operators, the S=2 bond projector, the AKLT Hamiltonian and its
//! exact zero-energy ground state.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, identity, kron, CMatrix, C64, ONE, ZERO};
use crate::qubit;
use crate::state::{SiteEncoding, StateVector};

/// Tolerance used to decide that an eigenvalue is zero.
pub const ZERO_ENERGY_TOL: f64 = 1e-8;

/// Cartesian spin components for a single site.
#[derive(Debug, Clone)]
pub struct SpinMatrices {
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

impl SpinMatrices {
    /// Spin-1 matrices in the `m = 1, 0, -1` basis.
    pub fn spin_one() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let x = CMatrix::from_row_slice(
            3,
            3,
            &[ZERO, c(r, 0.0), ZERO, c(r, 0.0), ZERO, c(r, 0.0), ZERO, c(r, 0.0), ZERO],
        );
        let y = CMatrix::from_row_slice(
            3,
            3,
            &[
                ZERO,
                c(0.0, -r),
                ZERO,
                c(0.0, r),
                ZERO,
                c(0.0, -r),
                ZERO,
                c(0.0, r),
                ZERO,
            ],
        );
        let z = CMatrix::from_row_slice(
            3,
            3,
            &[ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, c(-1.0, 0.0)],
        );
        SpinMatrices { x, y, z }
    }

    /// Spin-1/2 operators, i.e. half the Pauli matrices, with `|0>` spin up.
    pub fn spin_half() -> Self {
        let h = 0.5;
        SpinMatrices {
            x: CMatrix::from_row_slice(2, 2, &[ZERO, c(h, 0.0), c(h, 0.0), ZERO]),
            y: CMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -h), c(0.0, h), ZERO]),
            z: CMatrix::from_row_slice(2, 2, &[c(h, 0.0), ZERO, ZERO, c(-h, 0.0)]),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn components(&self) -> [&CMatrix; 3] {
        [&self.x, &self.y, &self.z]
    }

    pub fn component(&self, axis: Axis) -> &CMatrix {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }

    /// `Sx^2 + Sy^2 + Sz^2`.
    pub fn casimir(&self) -> CMatrix {
        &self.x * &self.x + &self.y * &self.y + &self.z * &self.z
    }

    /// `a.x Sx + a.y Sy + a.z Sz`.
    pub fn linear_combination(&self, coeffs: [f64; 3]) -> CMatrix {
        &self.x * C64::from(coeffs[0]) + &self.y * C64::from(coeffs[1]) + &self.z * C64::from(coeffs[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// `S_left . S_right` on the two-site space.
pub fn spin_dot(left: &SpinMatrices, right: &SpinMatrices) -> CMatrix {
    kron(&left.x, &right.x) + kron(&left.y, &right.y) + kron(&left.z, &right.z)
}

/// `1/2 [S.S + (S.S)^2 / 3 + 2/3 I]`, valid as a projector when both sites
/// carry spin 1.
pub fn simplified_projector(site: &SpinMatrices) -> CMatrix {
    let ss = spin_dot(site, site);
    let n = ss.nrows();
    (&ss + &ss * &ss * C64::from(1.0 / 3.0) + identity(n) * C64::from(2.0 / 3.0)) * C64::from(0.5)
}

/// `(S_tot)^2 [(S_tot)^2 - 2 I] / 24` with `S_tot = S_left + S_right`.
pub fn total_spin_projector(site: &SpinMatrices) -> CMatrix {
    let d = site.dim();
    let id = identity(d);
    let total: Vec<CMatrix> = site
        .components()
        .iter()
        .map(|s| kron(s, &id) + kron(&id, s))
        .collect();
    let s2 = total.iter().map(|t| t * t).fold(CMatrix::zeros(d * d, d * d), |a, b| a + b);
    let shifted = &s2 - identity(d * d) * C64::from(2.0);
    &s2 * shifted * C64::from(1.0 / 24.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BondMode {
    Spin1,
    QubitMapped,
}

impl BondMode {
    pub fn encoding(self) -> SiteEncoding {
        match self {
            BondMode::Spin1 => SiteEncoding::Spin1,
            BondMode::QubitMapped => SiteEncoding::QubitPair,
        }
    }

    pub fn from_encoding(enc: SiteEncoding) -> Self {
        match enc {
            SiteEncoding::Spin1 => BondMode::Spin1,
            SiteEncoding::QubitPair => BondMode::QubitMapped,
        }
    }

    /// Per-site spin operators in this representation.
    pub fn site_spins(self) -> SpinMatrices {
        match self {
            BondMode::Spin1 => SpinMatrices::spin_one(),
            BondMode::QubitMapped => qubit::mapped_site_spins(),
        }
    }
}

/// Projector onto total spin 2 of a bond.
#[derive(Debug, Clone)]
pub struct BondProjector {
    pub matrix: CMatrix,
    pub mode: BondMode,
}

impl BondProjector {
    pub fn new(mode: BondMode) -> Self {
        let matrix = match mode {
            BondMode::Spin1 => simplified_projector(&SpinMatrices::spin_one()),
            BondMode::QubitMapped => qubit::map_bond_projector().matrix,
        };
        BondProjector { matrix, mode }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn idempotency_defect(&self) -> f64 {
        linalg::max_abs_diff(&(&self.matrix * &self.matrix), &self.matrix)
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigen(&self.matrix).0
    }

    /// `I - P`, the projector onto the bond's zero-energy sector.
    pub fn complement(&self) -> CMatrix {
        identity(self.dim()) - &self.matrix
    }
}

pub fn bond_projector(mode: BondMode) -> BondProjector {
    BondProjector::new(mode)
}

/// Two-spin-1 state of definite total spin.
#[derive(Debug, Clone)]
pub struct CoupledState {
    pub s: u32,
    pub m: i32,
    pub vector: Vec<C64>,
}

/// The nine `|S, m>` states of two coupled spin-1 sites, built by lowering
/// from each stretched state and orthogonalizing against higher multiplets.
pub fn coupled_basis() -> Vec<CoupledState> {
    let spins = SpinMatrices::spin_one();
    let id = identity(3);
    let lower_site = &spins.x - &spins.y * linalg::I;
    let lower = kron(&lower_site, &id) + kron(&id, &lower_site);
    let total_m = |idx: usize| (1 - (idx / 3) as i32) + (1 - (idx % 3) as i32);

    let mut basis: Vec<CoupledState> = Vec::with_capacity(9);
    for s in (0..=2u32).rev() {
        // Top of the multiplet: unit vector in the m = s block orthogonal to
        // every state already found there.
        let m = s as i32;
        let mut top = vec![ZERO; 9];
        let candidates: Vec<usize> = (0..9).filter(|&i| total_m(i) == m).collect();
        for &seed in &candidates {
            let mut v = vec![ZERO; 9];
            v[seed] = ONE;
            for other in basis.iter().filter(|b| b.m == m) {
                let ov = linalg::inner(&other.vector, &v);
                for (x, y) in v.iter_mut().zip(&other.vector) {
                    *x -= ov * y;
                }
            }
            let n = linalg::norm_sqr(&v).sqrt();
            if n > 1e-8 {
                top = v.into_iter().map(|z| z / n).collect();
                break;
            }
        }
        // Condon-Shortley: first nonzero coefficient (largest m1) positive.
        if let Some(lead) = top.iter().find(|z| z.norm() > 1e-12).copied() {
            let p = lead.conj() / lead.norm();
            top.iter_mut().for_each(|z| *z *= p);
        }
        let mut current = top;
        for mm in (-m..=m).rev() {
            basis.push(CoupledState {
                s,
                m: mm,
                vector: current.clone(),
            });
            let v = nalgebra::DVector::from_vec(current.clone());
            let mut next: Vec<C64> = (&lower * v).iter().copied().collect();
            let n = linalg::norm_sqr(&next).sqrt();
            if n > 1e-12 {
                next.iter_mut().for_each(|z| *z /= n);
            }
            current = next;
        }
    }
    basis
}

fn check_chain(state: &StateVector, projector: &BondProjector) -> Result<()> {
    if state.encoding() != projector.mode.encoding() {
        return Err(Error::DimensionMismatch {
            expected: projector.dim(),
            actual: state.encoding().site_dim().pow(2),
        });
    }
    if state.sites() < 3 {
        return Err(Error::InvalidSiteCount {
            n: state.sites(),
            min: 3,
            max: usize::MAX,
        });
    }
    Ok(())
}

/// `H |psi> = sum_j P_{j,j+1} |psi>` with periodic wraparound. The returned
/// vector is not normalized (it may be zero).
pub fn hamiltonian_apply(state: &StateVector, projector: &BondProjector) -> Result<Vec<C64>> {
    check_chain(state, projector)?;
    let mut out = vec![ZERO; state.dim()];
    for bond in 0..state.sites() {
        let mut term = state.clone();
        term.apply_two_site(&projector.matrix, bond)?;
        for (o, t) in out.iter_mut().zip(term.amplitudes()) {
            *o += t;
        }
    }
    Ok(out)
}

/// `<psi|H|psi>`.
pub fn energy(state: &StateVector, projector: &BondProjector) -> Result<f64> {
    let h = hamiltonian_apply(state, projector)?;
    Ok(linalg::inner(state.amplitudes(), &h).re)
}

/// Exact zero-energy ground state of the periodic chain.
#[derive(Debug, Clone)]
pub struct AkltReference {
    pub state: StateVector,
    pub energy: f64,
    pub sites: usize,
    /// Lowest nonzero eigenvalue of the Hamiltonian.
    pub gap: f64,
}

pub const MIN_SITES: usize = 3;
pub const MAX_SPIN1_SITES: usize = 9;

/// Real symmetric Hamiltonian restricted to one total-`S^z` sector, with the
/// flat indices of the sector's basis states.
fn sector_hamiltonian(sites: usize, projector: &CMatrix, mz: i32) -> (DMatrix<f64>, Vec<usize>) {
    let dim = 3usize.pow(sites as u32);
    let digit_m = |d: usize| 1 - d as i32;
    let stride = |site: usize| 3usize.pow((sites - 1 - site) as u32);
    let configs: Vec<usize> = (0..dim)
        .filter(|&idx| (0..sites).map(|s| digit_m((idx / stride(s)) % 3)).sum::<i32>() == mz)
        .collect();
    let lookup: HashMap<usize, usize> = configs.iter().enumerate().map(|(i, &x)| (x, i)).collect();

    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for r in 0..9 {
        for col in 0..9 {
            let v = projector[(r, col)];
            if v.norm() > 1e-15 {
                debug_assert!(v.im.abs() < 1e-12);
                entries.push((r, col, v.re));
            }
        }
    }

    let n = configs.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (col_idx, &cfg) in configs.iter().enumerate() {
        for bond in 0..sites {
            let (sa, sb) = (stride(bond), stride((bond + 1) % sites));
            let (da, db) = ((cfg / sa) % 3, (cfg / sb) % 3);
            let local_in = da * 3 + db;
            let rest = cfg - da * sa - db * sb;
            for &(r, col, v) in entries.iter().filter(|e| e.1 == local_in) {
                let _ = col;
                let out = rest + (r / 3) * sa + (r % 3) * sb;
                let row_idx = lookup[&out];
                h[(row_idx, col_idx)] += v;
            }
        }
    }
    (h, configs)
}

/// Exact diagonalization of the periodic spin-1 AKLT chain.
///
/// The zero-energy state is found in the `S^z = 0` sector. Every multiplet
/// has a member there, so a single zero eigenvalue in that sector together
/// with a gapped `S^z = 1` sector proves the full zero-energy space is
/// one-dimensional.
pub fn aklt_state(sites: usize) -> Result<AkltReference> {
    if !(MIN_SITES..=MAX_SPIN1_SITES).contains(&sites) {
        return Err(Error::InvalidSiteCount {
            n: sites,
            min: MIN_SITES,
            max: MAX_SPIN1_SITES,
        });
    }
    let projector = BondProjector::new(BondMode::Spin1);
    let (h0, configs) = sector_hamiltonian(sites, &projector.matrix, 0);
    let eig = h0.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lowest = eig.eigenvalues[order[0]];
    if lowest.abs() > ZERO_ENERGY_TOL {
        return Err(Error::NoZeroEnergyState { lowest });
    }
    let zeros = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i].abs() <= ZERO_ENERGY_TOL)
        .count();
    if zeros != 1 {
        return Err(Error::DegenerateGroundSpace(zeros));
    }
    let (h1, _) = sector_hamiltonian(sites, &projector.matrix, 1);
    let lowest_m1 = h1
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if lowest_m1 <= ZERO_ENERGY_TOL {
        return Err(Error::DegenerateGroundSpace(zeros + 3));
    }
    let gap = eig.eigenvalues[order[1]].min(lowest_m1);

    let dim = 3usize.pow(sites as u32);
    let mut amps = vec![ZERO; dim];
    let column = eig.eigenvectors.column(order[0]);
    for (k, &cfg) in configs.iter().enumerate() {
        amps[cfg] = C64::from(column[k]);
    }
    let mut state = StateVector::from_amplitudes(sites, SiteEncoding::Spin1, amps)?;
    state.canonicalize_phase();
    let energy = energy(&state, &projector)?;
    Ok(AkltReference {
        state,
        energy,
        sites,
        gap,
    })
}
