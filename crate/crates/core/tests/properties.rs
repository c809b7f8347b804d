use aklt_mite::linalg::{max_abs_diff, unitarity_defect, C64, CMatrix};
use aklt_mite::mite::{correction_unitary_from, measurement_kraus, peak_energy, ProjectionStart};
use aklt_mite::recompile::{circuit_unitary, fidelity as unitary_fidelity, u3, ParamCircuit};
use aklt_mite::spin::{energy, BondMode, BondProjector};
use aklt_mite::state::{born_sample, fidelity, SiteEncoding, StateVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_state(sites: usize, encoding: SiteEncoding, parts: &[(f64, f64)]) -> StateVector {
    let amps = parts.iter().map(|&(re, im)| C64::new(re, im)).collect();
    let mut s = StateVector::from_amplitudes(sites, encoding, amps).unwrap();
    s.normalize();
    s
}

fn spin1_state() -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 27)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| random_state(3, SiteEncoding::Spin1, &v))
}

fn mode() -> impl Strategy<Value = BondMode> {
    prop_oneof![Just(BondMode::Spin1), Just(BondMode::QubitMapped)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kraus_pair_is_complete(eps in 0.01..3.0f64, mode in mode()) {
        let k = measurement_kraus(eps, &BondProjector::new(mode)).unwrap();
        prop_assert!(k.completeness_defect() <= 1e-12);
    }

    #[test]
    fn corrections_are_unitary(coeffs in prop::array::uniform6(0.0..1.0f64), mode in mode()) {
        let u = correction_unitary_from(&mode.site_spins(), coeffs);
        prop_assert!(unitarity_defect(&u) <= 1e-12);
    }

    #[test]
    fn ansatz_circuits_are_unitary(n_layers in 0usize..4, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..ParamCircuit::param_count(n_layers)).map(|_| rng.random_range(0.0..6.3)).collect();
        let v = circuit_unitary(&ParamCircuit::new(n_layers, params).unwrap()).unwrap();
        prop_assert!(unitarity_defect(&v) <= 1e-12);
    }

    #[test]
    fn unitary_fidelity_is_left_invariant(a in prop::array::uniform3(0.0..6.3f64), b in prop::array::uniform3(0.0..6.3f64), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut random_circuit = |n| {
            let p = (0..ParamCircuit::param_count(n)).map(|_| rng.random_range(0.0..6.3)).collect();
            circuit_unitary(&ParamCircuit::new(n, p).unwrap()).unwrap()
        };
        let (u, v, w) = (random_circuit(1), random_circuit(2), random_circuit(1));
        // An extra fixed unitary built from single-qubit gates on qubit 0.
        let local = aklt_mite::linalg::kron(&(u3(a[0], a[1], a[2]) * u3(b[0], b[1], b[2])), &aklt_mite::linalg::identity(16));
        let w = &local * w;
        let f = unitary_fidelity(&u, &v).unwrap();
        let g = unitary_fidelity(&(&w * &u), &(&w * &v)).unwrap();
        prop_assert!((f - g).abs() <= 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn state_fidelity_is_bounded_and_symmetric(a in spin1_state(), b in spin1_state()) {
        let f = fidelity(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        prop_assert!((f - fidelity(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn hamiltonian_is_positive(s in spin1_state()) {
        let e = energy(&s, &BondProjector::new(BondMode::Spin1)).unwrap();
        prop_assert!(e >= -1e-12);
        prop_assert!(e <= 3.0 + 1e-12);
    }

    #[test]
    fn peak_energy_is_bounded_and_odd(k0 in 0u64..500, k1 in 0u64..500, eps in 0.05..2.0f64) {
        prop_assume!(k0 + k1 > 0);
        let e = peak_energy(k0, k1, eps).unwrap();
        let bound = std::f64::consts::PI / (4.0 * eps);
        prop_assert!(e.abs() <= bound + 1e-12);
        prop_assert!((e + peak_energy(k1, k0, eps).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn measurement_keeps_states_normalized(s in spin1_state(), bond in 0usize..3, seed in any::<u64>()) {
        let k = measurement_kraus(0.5, &BondProjector::new(BondMode::Spin1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = s.clone();
        let m = born_sample(&k, bond, &mut t, &mut rng).unwrap();
        prop_assert!((t.norm() - 1.0).abs() <= 1e-12);
        prop_assert!((m.p0 + m.p1 - 1.0).abs() <= 1e-12);
    }
}

/// Outcome frequencies of repeated Born sampling against the analytic
/// probabilities, within three standard deviations.
fn frequency_z(state: &StateVector, bond: usize, mode: BondMode, seed: u64, samples: usize) -> (f64, f64) {
    let k = measurement_kraus(0.5, &BondProjector::new(mode)).unwrap();
    let m0m0: CMatrix = k.m0.adjoint() * &k.m0;
    let p0 = state.bond_expectation(&m0m0, bond).unwrap().re;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zeros = (0..samples)
        .filter(|_| {
            let mut s = state.clone();
            born_sample(&k, bond, &mut s, &mut rng).unwrap().outcome == 0
        })
        .count();
    let freq = zeros as f64 / samples as f64;
    let sigma = (p0 * (1.0 - p0) / samples as f64).sqrt();
    (p0, (freq - p0).abs() / sigma)
}

#[test]
fn born_sampling_matches_analytic_probabilities() {
    let neel = ProjectionStart::XNeel.state(4).unwrap();
    for (bond, seed) in [(0, 1), (1, 2), (3, 3)] {
        let (p0, z) = frequency_z(&neel, bond, BondMode::Spin1, seed, 20_000);
        assert!(p0 > 0.05 && p0 < 0.95, "degenerate probability {p0}");
        assert!(z <= 3.0, "bond {bond}: z = {z}");
    }
    let up = StateVector::product(3, SiteEncoding::QubitPair, &aklt_mite::state::LocalKet::Index(0)).unwrap();
    let (p0, z) = frequency_z(&up, 1, BondMode::QubitMapped, 4, 20_000);
    assert!((p0 - (1.0 - 1.0f64.sin()) / 2.0).abs() < 1e-12);
    assert!(z <= 3.0, "qubit: z = {z}");
}

#[test]
fn kraus_is_exactly_diagonal_on_projector_eigenspaces() {
    let p = BondProjector::new(BondMode::Spin1);
    let k = measurement_kraus(0.5, &p).unwrap();
    let scale = |a: f64| C64::from(a / 2f64.sqrt());
    let expected0 = aklt_mite::linalg::identity(9) * scale(1.0) + &p.matrix * scale(0.5f64.cos() - 1.0 - 0.5f64.sin());
    assert!(max_abs_diff(&k.m0, &expected0) <= 1e-15);
}
