//! Preparation of the periodic spin-1 AKLT ground state by measurement-based
//! imaginary time evolution, in a native spin-1 encoding and a two-qubit
//! per site encoding, plus a variational recompiler for the bond measurement.

pub mod error;
pub mod export;
pub mod linalg;
pub mod mite;
pub mod qubit;
pub mod recompile;
pub mod spin;
pub mod state;

pub use error::{Error, Result};
pub use mite::{
    critical_rounds, direct_projection_converge, measurement_kraus, peak_energy, prepare,
    CounterScope, MeasurementCounter, ProjectionStart, MiteConfig, MiteEngine, NoiseSpec, SubroutineStats,
    TrajectoryRecord,
};
pub use qubit::{map_bond_projector, reference_state, symmetric_weight};
pub use spin::{aklt_state, bond_projector, AkltReference, Axis, BondMode, BondProjector, SpinMatrices};
pub use state::{born_sample, fidelity, KrausPair, LocalKet, Measurement, SiteEncoding, StateVector};
