use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid local ket: {0}")]
    InvalidKet(String),

    #[error("invalid site count {n}: supported range is {min}..={max}")]
    InvalidSiteCount { n: usize, min: usize, max: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("operator is not idempotent (||P^2 - P|| = {defect:e})")]
    NotIdempotent { defect: f64 },

    #[error("both measurement outcomes have zero probability; the Kraus pair is corrupted")]
    ZeroOutcomeNorm,

    #[error("peak energy is undefined with no recorded outcomes")]
    EmptyCounter,

    #[error("no zero-energy ground state: lowest eigenvalue {lowest:e}")]
    NoZeroEnergyState { lowest: f64 },

    #[error("zero-energy space has dimension {0}, expected 1")]
    DegenerateGroundSpace(usize),

    #[error("state norm underflow after projection")]
    NormUnderflow,

    #[error("fidelity series never reaches {level}")]
    NeverCrosses { level: f64 },

    #[error("parameter vector has length {actual}, circuit needs {expected}")]
    ParamLength { expected: usize, actual: usize },

    #[error("optimizer produced a non-finite loss")]
    NonFiniteLoss,
}

pub type Result<T> = std::result::Result<T, Error>;
