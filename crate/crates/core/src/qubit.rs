//! Encoding of each spin-1 site as two spin-1/2 qubits `(a, b)`.
//!
//! Per-site spin operators become `sigma_a + sigma_b` (spin-1/2 operators
//! with the factor 1/2). The triplet isometry maps
//! `m = 1, 0, -1` to `|00>, (|01> + |10>)/sqrt(2), |11>`.

use crate::error::{Error, Result};
use crate::linalg::{self, c, identity, kron, CMatrix, C64, ONE, ZERO};
use crate::spin::{self, AkltReference, BondMode, SpinMatrices};
use crate::state::{SiteEncoding, StateVector};

pub const MAX_QUBIT_SITES: usize = 8;

/// `sigma_a + sigma_b` for each Cartesian component, as 4x4 matrices.
pub fn mapped_site_spins() -> SpinMatrices {
    let half = SpinMatrices::spin_half();
    let id = identity(2);
    let map = |s: &CMatrix| kron(s, &id) + kron(&id, s);
    SpinMatrices {
        x: map(&half.x),
        y: map(&half.y),
        z: map(&half.z),
    }
}

/// 4x3 isometry from a spin-1 site into the triplet of its qubit pair.
pub fn triplet_isometry() -> CMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CMatrix::zeros(4, 3);
    v[(0, 0)] = ONE;
    v[(1, 1)] = c(r, 0.0);
    v[(2, 1)] = c(r, 0.0);
    v[(3, 2)] = ONE;
    v
}

/// Projector onto the triplet (a-b symmetric) sector of one site.
pub fn site_symmetric_projector() -> CMatrix {
    let v = triplet_isometry();
    &v * v.adjoint()
}

/// Exchange of the two qubits of one site.
pub fn site_swap() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    m
}

/// A 16x16 operator on two qubit-pair sites together with the 9x9 spin-1
/// operator it encodes.
#[derive(Debug, Clone)]
pub struct QubitMappedOperator {
    pub matrix: CMatrix,
    pub parent: CMatrix,
}

impl QubitMappedOperator {
    /// `(V x V)^dag M (V x V)`: the block acting on the triplet sectors.
    pub fn pullback(&self) -> CMatrix {
        pullback(&self.matrix)
    }
}

pub fn pullback(op: &CMatrix) -> CMatrix {
    let v = triplet_isometry();
    let vv = kron(&v, &v);
    vv.adjoint() * op * vv
}

/// The S=2 bond projector in qubit form. It uses the total-spin expression,
/// which stays a projector on the full 16-dimensional space; the simplified
/// expression relies on `S.S = 2` per site and only agrees on the triplet
/// sectors (see [`mapped_simplified_projector`]).
pub fn map_bond_projector() -> QubitMappedOperator {
    QubitMappedOperator {
        matrix: spin::total_spin_projector(&mapped_site_spins()),
        parent: spin::simplified_projector(&SpinMatrices::spin_one()),
    }
}

/// The simplified projector formula evaluated on the mapped operators. On
/// pairs containing a singlet site it has eigenvalue 1/3, so it is not a
/// projector on the full space.
pub fn mapped_simplified_projector() -> CMatrix {
    spin::simplified_projector(&mapped_site_spins())
}

/// `<psi|Pi_sym|psi>` with `Pi_sym` the product of per-site triplet projectors.
pub fn symmetric_weight(state: &StateVector) -> Result<f64> {
    if state.encoding() != SiteEncoding::QubitPair {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: state.encoding().site_dim(),
        });
    }
    let pi = site_symmetric_projector();
    let mut projected = state.clone();
    for site in 0..state.sites() {
        projected.apply_one_site(&pi, site)?;
    }
    Ok(linalg::norm_sqr(projected.amplitudes()).clamp(0.0, 1.0))
}

/// Maps a spin-1 chain state into the qubit encoding site by site.
pub fn embed_spin1_state(state: &StateVector) -> Result<StateVector> {
    if state.encoding() != SiteEncoding::Spin1 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: state.encoding().site_dim(),
        });
    }
    let v = triplet_isometry();
    let n = state.sites();
    let mut out = vec![ZERO; 4usize.pow(n as u32)];
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        if amp.norm() == 0.0 {
            continue;
        }
        // Expand each spin-1 digit into its triplet components.
        let digits: Vec<usize> = (0..n)
            .map(|s| (idx / 3usize.pow((n - 1 - s) as u32)) % 3)
            .collect();
        let mut partial: Vec<(usize, C64)> = vec![(0, *amp)];
        for &d in &digits {
            let mut next = Vec::with_capacity(partial.len() * 2);
            for &(q, a) in &partial {
                for k in 0..4 {
                    let w = v[(k, d)];
                    if w.norm() > 0.0 {
                        next.push((q * 4 + k, a * w));
                    }
                }
            }
            partial = next;
        }
        for (q, a) in partial {
            out[q] += a;
        }
    }
    StateVector::from_amplitudes(n, SiteEncoding::QubitPair, out)
}

/// Qubit-encoded AKLT reference.
///
/// The mapped Hamiltonian is compressed onto the product-triplet basis with
/// the isometry, diagonalized there by the spin-1 solver's sector method, and
/// the ground state is lifted back. The compression goes through
/// [`map_bond_projector`], so a wrong mapping shows up as a nonzero energy.
pub fn qubit_aklt_state(sites: usize) -> Result<AkltReference> {
    if !(spin::MIN_SITES..=MAX_QUBIT_SITES).contains(&sites) {
        return Err(Error::InvalidSiteCount {
            n: sites,
            min: spin::MIN_SITES,
            max: MAX_QUBIT_SITES,
        });
    }
    let compressed = map_bond_projector().pullback();
    let defect = linalg::max_abs_diff(&compressed, &spin::bond_projector(BondMode::Spin1).matrix);
    if defect > 1e-10 {
        return Err(Error::NotIdempotent { defect });
    }
    let spin1 = spin::aklt_state(sites)?;
    let mut state = embed_spin1_state(&spin1.state)?;
    state.canonicalize_phase();
    let projector = spin::bond_projector(BondMode::QubitMapped);
    let energy = spin::energy(&state, &projector)?;
    if energy.abs() > spin::ZERO_ENERGY_TOL {
        return Err(Error::NoZeroEnergyState { lowest: energy });
    }
    Ok(AkltReference {
        state,
        energy,
        sites,
        gap: spin1.gap,
    })
}

/// AKLT reference in the requested encoding.
pub fn reference_state(sites: usize, encoding: SiteEncoding) -> Result<AkltReference> {
    match encoding {
        SiteEncoding::Spin1 => spin::aklt_state(sites),
        SiteEncoding::QubitPair => qubit_aklt_state(sites),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, hermitian_eigen, max_abs, max_abs_diff};
    use crate::state::LocalKet;

    #[test]
    fn mapped_projector_commutes_with_site_swaps() {
        let p = map_bond_projector().matrix;
        let id = identity(4);
        for swap in [kron(&site_swap(), &id), kron(&id, &site_swap())] {
            assert!(max_abs(&commutator(&p, &swap)) <= 1e-12);
        }
    }

    #[test]
    fn pullback_equals_spin1_projector() {
        let mapped = map_bond_projector();
        assert!(max_abs_diff(&mapped.pullback(), &mapped.parent) <= 1e-12);
        let simplified = pullback(&mapped_simplified_projector());
        assert!(max_abs_diff(&simplified, &mapped.parent) <= 1e-12);
    }

    #[test]
    fn mapped_projector_traces() {
        let p = map_bond_projector().matrix;
        assert!((linalg::trace(&p).re - 5.0).abs() < 1e-12);
        let sym = kron(&site_symmetric_projector(), &site_symmetric_projector());
        assert!((linalg::trace(&(&sym * &p * &sym)).re - 5.0).abs() < 1e-12);
        // The simplified expression picks up 1/3 on each of the 7 pair
        // states containing a site singlet: 5 + 7/3.
        let simplified = mapped_simplified_projector();
        assert!((linalg::trace(&simplified).re - 22.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mapped_projector_spectrum_matches_spin1_on_symmetric_sector() {
        let compressed = map_bond_projector().pullback();
        let (ev, _) = hermitian_eigen(&compressed);
        assert!(ev[..4].iter().all(|e| e.abs() < 1e-12));
        assert!(ev[4..].iter().all(|e| (e - 1.0).abs() < 1e-12));
        let full = crate::spin::BondProjector::new(BondMode::QubitMapped);
        assert!(full.idempotency_defect() < 1e-12);
    }

    #[test]
    fn symmetric_weight_cases() {
        let up = StateVector::product(3, SiteEncoding::QubitPair, &LocalKet::Index(0)).unwrap();
        assert!((symmetric_weight(&up).unwrap() - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = vec![ZERO, c(r, 0.0), c(-r, 0.0), ZERO];
        let s = StateVector::product(3, SiteEncoding::QubitPair, &LocalKet::Vector(singlet)).unwrap();
        assert!(symmetric_weight(&s).unwrap() < 1e-14);
    }

    #[test]
    fn qubit_reference_matches_full_space_diagonalization() {
        // Independent route for N = 3: diagonalize the 64x64 mapped
        // Hamiltonian, then select the symmetric vector in its null space.
        let p = spin::bond_projector(BondMode::QubitMapped);
        let mut h = CMatrix::zeros(64, 64);
        for col in 0..64 {
            let mut amps = vec![ZERO; 64];
            amps[col] = ONE;
            let e = StateVector::from_amplitudes(3, SiteEncoding::QubitPair, amps).unwrap();
            for (r, v) in spin::hamiltonian_apply(&e, &p).unwrap().into_iter().enumerate() {
                h[(r, col)] = v;
            }
        }
        let (values, vectors) = hermitian_eigen(&h);
        let zero_cols: Vec<usize> = (0..64).filter(|&i| values[i].abs() < 1e-8).collect();
        let null = CMatrix::from_fn(64, zero_cols.len(), |r, k| vectors[(r, zero_cols[k])]);
        let pi1 = site_symmetric_projector();
        let pi = kron(&kron(&pi1, &pi1), &pi1);
        let restricted = null.adjoint() * &pi * &null;
        let (w, u) = hermitian_eigen(&restricted);
        let top = w.len() - 1;
        assert!((w[top] - 1.0).abs() < 1e-9);
        assert!(w[top - 1] < 1.0 - 1e-6, "symmetric null space must be 1-dimensional");
        let ground = &null * u.column(top);
        let reference = qubit_aklt_state(3).unwrap();
        let ov = linalg::inner(ground.as_slice(), reference.state.amplitudes());
        assert!((ov.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn embedding_preserves_norm_and_symmetry() {
        let s = spin::aklt_state(4).unwrap().state;
        let q = embed_spin1_state(&s).unwrap();
        assert!((q.norm() - 1.0).abs() < 1e-12);
        assert!((symmetric_weight(&q).unwrap() - 1.0).abs() < 1e-12);
    }
}
