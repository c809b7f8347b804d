//! Named invariant checks with a machine-readable report.

use std::f64::consts::PI;

use aklt_mite::linalg::{
    commutator, expm_taylor, hermitian_eigen, is_hermitian, kron, max_abs, max_abs_diff, unitarity_defect, C64,
    CMatrix,
};
use aklt_mite::mite::{
    correction_unitary, kraus_with_prefactor, measurement_kraus, peak_energy, ProjectionStart,
};
use aklt_mite::qubit::{map_bond_projector, qubit_aklt_state, site_symmetric_projector, symmetric_weight};
use aklt_mite::recompile::{target_generator, target_unitary, Objective, ParamCircuit};
use aklt_mite::spin::{aklt_state, energy, simplified_projector, total_spin_projector};
use aklt_mite::{born_sample, BondMode, BondProjector, KrausPair, MiteConfig, MiteEngine, SpinMatrices};
use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::output::{TOOL, VERSION};

/// Deliberate faults for exercising the suite itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Kraus pair built with prefactor 1/2 instead of 1/sqrt(2).
    HalfKraus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Measured deviation (or statistic) compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub fault: Option<Fault>,
    pub passed: bool,
    pub failed: Vec<&'static str>,
    pub checks: Vec<Check>,
}

const EPSILON: f64 = 0.5;

fn at_most(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> Check {
    Check {
        name,
        passed: value <= tolerance,
        value,
        tolerance,
        detail: detail.into(),
    }
}

fn kraus(mode: BondMode, fault: Option<Fault>) -> Result<KrausPair, String> {
    let p = BondProjector::new(mode);
    match fault {
        Some(Fault::HalfKraus) => Ok(kraus_with_prefactor(EPSILON, &p, 0.5)),
        None => measurement_kraus(EPSILON, &p).map_err(|e| e.to_string()),
    }
}

type CheckFn = fn(Option<Fault>) -> Result<Check, String>;

fn spin_algebra(_: Option<Fault>) -> Result<Check, String> {
    let mut worst: f64 = 0.0;
    for s in [SpinMatrices::spin_one(), SpinMatrices::spin_half()] {
        let [x, y, z] = s.components();
        let i = C64::i();
        worst = worst
            .max(max_abs_diff(&commutator(x, y), &(z * i)))
            .max(max_abs_diff(&commutator(y, z), &(x * i)))
            .max(max_abs_diff(&commutator(z, x), &(y * i)));
    }
    Ok(at_most("spin_commutators", worst, 1e-12, "[Sx,Sy] = iSz cyclically, spin 1 and 1/2"))
}

fn projector_idempotent(_: Option<Fault>) -> Result<Check, String> {
    let d = [BondMode::Spin1, BondMode::QubitMapped]
        .iter()
        .map(|&m| BondProjector::new(m).idempotency_defect())
        .fold(0.0, f64::max);
    Ok(at_most("projector_idempotent", d, 1e-12, "P^2 = P in both encodings"))
}

fn projector_hermitian(_: Option<Fault>) -> Result<Check, String> {
    let d = [BondMode::Spin1, BondMode::QubitMapped]
        .iter()
        .map(|&m| {
            let p = BondProjector::new(m).matrix;
            max_abs_diff(&p, &p.adjoint())
        })
        .fold(0.0, f64::max);
    Ok(at_most("projector_hermitian", d, 1e-12, "P = P^dagger in both encodings"))
}

fn projector_spectrum(_: Option<Fault>) -> Result<Check, String> {
    let p = BondProjector::new(BondMode::Spin1);
    let ev = p.eigenvalues();
    let expected: Vec<f64> = [0.0; 4].into_iter().chain([1.0; 5]).collect();
    let dev = ev.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let dev = dev.max((p.trace() - 5.0).abs());
    Ok(at_most("projector_spectrum", dev, 1e-10, "eigenvalues {0 x4, 1 x5}, trace 5"))
}

fn projector_forms_agree(_: Option<Fault>) -> Result<Check, String> {
    let s = SpinMatrices::spin_one();
    let d = max_abs_diff(&simplified_projector(&s), &total_spin_projector(&s));
    Ok(at_most("projector_forms_agree", d, 1e-12, "simplified and total-spin forms on spin 1"))
}

fn kraus_completeness(fault: Option<Fault>) -> Result<Check, String> {
    let d = [BondMode::Spin1, BondMode::QubitMapped]
        .iter()
        .map(|&m| kraus(m, fault).map(|k| k.completeness_defect()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(at_most("kraus_completeness", d, 1e-12, "M0^dag M0 + M1^dag M1 = I"))
}

fn kraus_hermitian(fault: Option<Fault>) -> Result<Check, String> {
    let k = kraus(BondMode::Spin1, fault)?;
    let ok = is_hermitian(&k.m0, 1e-12) && is_hermitian(&k.m1, 1e-12);
    let d = max_abs_diff(&k.m0, &k.m0.adjoint()).max(max_abs_diff(&k.m1, &k.m1.adjoint()));
    let mut c = at_most("kraus_hermitian", d, 1e-12, "both Kraus operators Hermitian");
    c.passed &= ok;
    Ok(c)
}

fn correction_unitarity(_: Option<Fault>) -> Result<Check, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for mode in [BondMode::Spin1, BondMode::QubitMapped] {
        let spins = mode.site_spins();
        for _ in 0..25 {
            worst = worst.max(unitarity_defect(&correction_unitary(&spins, &mut rng)));
        }
    }
    Ok(at_most("correction_unitary", worst, 1e-12, "50 random corrections"))
}

fn target_closed_form(_: Option<Fault>) -> Result<Check, String> {
    let mut worst: f64 = 0.0;
    for eps in [0.1, 0.5, 1.3] {
        let closed = target_unitary(eps).matrix;
        let oracle = expm_taylor(&(target_generator() * C64::new(0.0, -eps)));
        worst = worst.max(max_abs_diff(&closed, &oracle)).max(unitarity_defect(&closed));
    }
    Ok(at_most("target_unitary_closed_form", worst, 1e-10, "closed form vs exp(-i eps P(x)Y)"))
}

fn target_implements_kraus(fault: Option<Fault>) -> Result<Check, String> {
    // <q|U|+> on the ancilla equals M_q on the system.
    let u = target_unitary(EPSILON).matrix;
    let k = kraus(BondMode::QubitMapped, fault)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut worst: f64 = 0.0;
    for (q, m) in [&k.m0, &k.m1].into_iter().enumerate() {
        let block = CMatrix::from_fn(16, 16, |i, j| {
            (u[(2 * i + q, 2 * j)] + u[(2 * i + q, 2 * j + 1)]) * C64::from(h)
        });
        worst = worst.max(max_abs_diff(&block, m));
    }
    Ok(at_most("target_realizes_kraus", worst, 1e-12, "ancilla-projected target matches M_q"))
}

fn aklt_zero_energy(_: Option<Fault>) -> Result<Check, String> {
    let p = BondProjector::new(BondMode::Spin1);
    let complement = p.complement();
    let mut worst: f64 = 0.0;
    for n in 3..=6 {
        let r = aklt_state(n).map_err(|e| e.to_string())?;
        worst = worst.max(energy(&r.state, &p).map_err(|e| e.to_string())?.abs());
        for b in 0..n {
            let v = r.state.bond_expectation(&complement, b).map_err(|e| e.to_string())?;
            worst = worst.max((v.re - 1.0).abs()).max(v.im.abs());
        }
    }
    Ok(at_most("aklt_zero_energy", worst, 1e-8, "H|AKLT> = 0 and unit bond fidelity, N = 3..6"))
}

fn aklt_unique(_: Option<Fault>) -> Result<Check, String> {
    let gap = (3..=6)
        .map(|n| aklt_state(n).map(|r| r.gap).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(Check {
        name: "aklt_unique",
        passed: gap > 1e-3,
        value: gap,
        tolerance: 1e-3,
        detail: "smallest spectral gap above the zero-energy state, N = 3..6".into(),
    })
}

fn qubit_pullback(_: Option<Fault>) -> Result<Check, String> {
    let m = map_bond_projector();
    let d = max_abs_diff(&m.pullback(), &BondProjector::new(BondMode::Spin1).matrix);
    Ok(at_most("qubit_pullback", d, 1e-12, "triplet block of the mapped projector is the spin-1 projector"))
}

fn qubit_symmetric_sector(_: Option<Fault>) -> Result<Check, String> {
    let pi = site_symmetric_projector();
    let pipi = kron(&pi, &pi);
    let k = kraus(BondMode::QubitMapped, None)?;
    let mut worst = max_abs(&commutator(&map_bond_projector().matrix, &pipi));
    worst = worst.max(max_abs(&commutator(&k.m0, &pipi)));
    let r = qubit_aklt_state(3).map_err(|e| e.to_string())?;
    worst = worst.max((symmetric_weight(&r.state).map_err(|e| e.to_string())? - 1.0).abs());
    Ok(at_most("qubit_symmetric_sector", worst, 1e-10, "bond operators preserve the triplet sector"))
}

fn gradient_check(_: Option<Fault>) -> Result<Check, String> {
    let n_layers = 2;
    let obj = Objective::new(target_unitary(EPSILON).matrix, n_layers);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f64> = (0..ParamCircuit::param_count(n_layers))
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();
    let g = obj.gradient(&x).map_err(|e| e.to_string())?;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let fd = (obj.loss(&xp).map_err(|e| e.to_string())? - obj.loss(&xm).map_err(|e| e.to_string())?) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs());
    }
    Ok(at_most("recompile_gradient", worst, 1e-7, "analytic gradient vs central differences"))
}

fn born_frequencies(fault: Option<Fault>) -> Result<Check, String> {
    let k = kraus(BondMode::Spin1, fault)?;
    let state = ProjectionStart::XNeel.state(4).map_err(|e| e.to_string())?;
    let m0m0 = k.m0.adjoint() * &k.m0;
    let m1m1 = k.m1.adjoint() * &k.m1;
    let w0 = state.bond_expectation(&m0m0, 0).map_err(|e| e.to_string())?.re;
    let w1 = state.bond_expectation(&m1m1, 0).map_err(|e| e.to_string())?.re;
    let p0 = w0;
    let samples = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut zeros = 0usize;
    for _ in 0..samples {
        let mut s = state.clone();
        if born_sample(&k, 0, &mut s, &mut rng).map_err(|e| e.to_string())?.outcome == 0 {
            zeros += 1;
        }
    }
    let freq = zeros as f64 / samples as f64;
    let sigma = (p0 * (1.0 - p0) / samples as f64).sqrt();
    let z = (freq - p0).abs() / sigma;
    Ok(Check {
        name: "born_frequencies",
        passed: z <= 3.0 && (w0 + w1 - 1.0).abs() <= 1e-12,
        value: z,
        tolerance: 3.0,
        detail: format!("{samples} samples, p0 = {p0:.6}, observed {freq:.6}, |z| in sigma"),
    })
}

fn peak_energy_examples(_: Option<Fault>) -> Result<Check, String> {
    let e = |k0, k1| peak_energy(k0, k1, EPSILON).map_err(|e| e.to_string());
    let dev = e(5, 5)?
        .abs()
        .max((e(0, 1)? - PI / (4.0 * EPSILON)).abs())
        .max((e(1, 0)? + PI / (4.0 * EPSILON)).abs())
        .max((e(1, 3)? - (0.5f64).asin() / (2.0 * EPSILON)).abs());
    let empty = peak_energy(0, 0, EPSILON).is_err();
    let mut c = at_most("peak_energy_formula", dev, 1e-12, "closed-form examples and empty-counter error");
    c.passed &= empty;
    Ok(c)
}

fn settled_state_is_fixed(fault: Option<Fault>) -> Result<Check, String> {
    // AKLT is an eigenstate of both Kraus operators, so measurement leaves it alone.
    let k = kraus(BondMode::Spin1, fault)?;
    let r = aklt_state(4).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut s = r.state.clone();
    for b in 0..4 {
        for _ in 0..10 {
            born_sample(&k, b, &mut s, &mut rng).map_err(|e| e.to_string())?;
        }
    }
    let f = aklt_mite::fidelity(&r.state, &s).map_err(|e| e.to_string())?;
    Ok(at_most("aklt_measurement_fixed_point", (1.0 - f).abs(), 1e-10, "40 measurements on AKLT, N = 4"))
}

fn trajectory_replay(_: Option<Fault>) -> Result<Check, String> {
    let cfg = MiteConfig {
        r_max: 3,
        seed: 99,
        ..MiteConfig::default()
    };
    let run = || aklt_mite::prepare(&cfg, 3, BondMode::Spin1).map_err(|e| e.to_string());
    let (a, b) = (run()?, run()?);
    let same = a == b;
    Ok(Check {
        name: "trajectory_replay",
        passed: same,
        value: if same { 0.0 } else { 1.0 },
        tolerance: 0.0,
        detail: "two runs with one seed give identical records".into(),
    })
}

fn engine_rejects_bad_sizes(_: Option<Fault>) -> Result<Check, String> {
    let cfg = MiteConfig::default();
    let bad = [
        MiteEngine::new(cfg.clone(), BondMode::Spin1, 2).is_err(),
        MiteEngine::new(cfg.clone(), BondMode::Spin1, 10).is_err(),
        MiteEngine::new(cfg, BondMode::QubitMapped, 9).is_err(),
    ];
    let rejected = bad.iter().filter(|b| **b).count();
    Ok(Check {
        name: "site_bounds",
        passed: rejected == bad.len(),
        value: (bad.len() - rejected) as f64,
        tolerance: 0.0,
        detail: "N = 2, spin-1 N = 10 and qubit N = 9 are rejected".into(),
    })
}

fn hermitian_eigen_sanity(_: Option<Fault>) -> Result<Check, String> {
    // The eigen solver underlies every exponential; check it reconstructs P.
    let p = BondProjector::new(BondMode::QubitMapped).matrix;
    let (values, vectors) = hermitian_eigen(&p);
    let n = values.len();
    let diag = CMatrix::from_fn(n, n, |i, j| if i == j { C64::from(values[i]) } else { C64::from(0.0) });
    let d = max_abs_diff(&(&vectors * diag * vectors.adjoint()), &p);
    Ok(at_most("eigen_reconstruction", d, 1e-12, "V diag(w) V^dag = P on the mapped space"))
}

const CHECKS: &[(&str, CheckFn)] = &[
    ("spin_commutators", spin_algebra),
    ("projector_idempotent", projector_idempotent),
    ("projector_hermitian", projector_hermitian),
    ("projector_spectrum", projector_spectrum),
    ("projector_forms_agree", projector_forms_agree),
    ("kraus_completeness", kraus_completeness),
    ("kraus_hermitian", kraus_hermitian),
    ("correction_unitary", correction_unitarity),
    ("target_unitary_closed_form", target_closed_form),
    ("target_realizes_kraus", target_implements_kraus),
    ("aklt_zero_energy", aklt_zero_energy),
    ("aklt_unique", aklt_unique),
    ("qubit_pullback", qubit_pullback),
    ("qubit_symmetric_sector", qubit_symmetric_sector),
    ("recompile_gradient", gradient_check),
    ("born_frequencies", born_frequencies),
    ("peak_energy_formula", peak_energy_examples),
    ("aklt_measurement_fixed_point", settled_state_is_fixed),
    ("trajectory_replay", trajectory_replay),
    ("site_bounds", engine_rejects_bad_sizes),
    ("eigen_reconstruction", hermitian_eigen_sanity),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

/// Runs every check. A check that errors counts as failed.
pub fn run_verify(fault: Option<Fault>) -> VerifyReport {
    let checks: Vec<Check> = CHECKS
        .iter()
        .map(|(name, f)| {
            f(fault).unwrap_or_else(|err| Check {
                name,
                passed: false,
                value: f64::NAN,
                tolerance: f64::NAN,
                detail: format!("error: {err}"),
            })
        })
        .collect();
    let failed: Vec<&'static str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    VerifyReport {
        tool: TOOL,
        version: VERSION,
        fault,
        passed: failed.is_empty(),
        failed,
        checks,
    }
}
