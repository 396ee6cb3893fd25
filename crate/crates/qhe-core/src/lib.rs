//! Liouville-space simulation of driven multilevel quantum heat engines.
//!
//! Density matrices are flattened into vectors ("density vectors") and all
//! dynamics is generated by dense complex superoperators acting on them, so
//! that every evolution step is a matrix exponential and every engine cycle
//! is an ordered product of such propagators. On top of that machinery the
//! crate builds a concrete four-level working medium coupled to two thermal
//! baths and a resonant drive, schedules it as a continuous, two-stroke,
//! four-stroke, or two-field engine, and keeps per-cycle work/heat ledgers
//! precise enough to test equivalence, power-bound, and over-thermalization
//! properties numerically.
//!
//! Modules:
//! - [`liouville`]: vectorization, superoperator construction, norms,
//!   propagation, CPTP checks.
//! - [`model`]: the four-level engine (levels, baths, drive) and regime
//!   validity warnings.
//! - [`protocol`]: stroke schedules as symmetric sequences of
//!   constant-generator segments, action, cycle propagators, symmetric
//!   rearrangement.
//! - [`thermo`]: steady states, transients, work/heat attribution,
//!   coherent/stochastic work decomposition, dephasing.
//! - [`analysis`]: splitting-defect bounds, equivalence sweeps, the
//!   stochastic power bound, passivity, rearrangement verification.
//! - [`grid`]: deterministic (optionally rayon-parallel) grid evaluation
//!   for parameter sweeps.

pub mod analysis;
pub mod expm;
pub mod grid;
pub mod liouville;
pub mod model;
pub mod protocol;
pub mod thermo;

/// Errors produced by construction and simulation routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator entries must be finite: {0}")]
    NonFinite(String),
    #[error("operator is not Hermitian: relative defect {defect:.3e}")]
    NotHermitian { defect: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("negative duration {0} (backward evolution not supported)")]
    NegativeDuration(f64),
    #[error("state is not a valid density vector: {0}")]
    InvalidDensity(String),
    #[error("expectation value has imaginary part {imag:.3e} above tolerance (corrupted state)")]
    CorruptedState { imag: f64 },
    #[error("steady-state solve failed: {0}")]
    SteadyState(String),
    #[error("evolution left the physical state space: {0}")]
    CptpViolation(String),
    #[error("energy attribution mismatch: per-agent sum deviates from total by {0:.3e} (relative)")]
    AttributionMismatch(f64),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("linear algebra failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
