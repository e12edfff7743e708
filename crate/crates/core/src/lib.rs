//! Simulation and closed-form evaluation of a single trapped two-level ion
//! whose ground-state occupancy is continuously measured.
//!
//! The crate is organised in four layers:
//!
//! * [`hilbert`]: the truncated vibronic space `{↓, ↑} ⊗ Fock(N_max)`, ladder
//!   operators, nonlinear sideband Rabi frequencies, initial states, partial
//!   traces and motional observables.
//! * [`dynamics`]: the measured master equation, integrated either under the
//!   resonant Jaynes-Cummings approximation or with the full standing-wave
//!   coupling, plus the Runge-Kutta integrators behind it.
//! * [`closed_form`]: analytic ground-state occupancy, quantum-damped position
//!   and energy, long-time asymptotes and equipartition diagnostics.
//! * [`scenario`]: config parsing, scenario runs, κ sweeps, presets and the
//!   CSV/JSON artifacts consumed by the command-line front end.
//!
//! Units: ħ = 1 throughout. Frequencies are angular (rad/s), the measurement
//! coupling κ is a rate (1/s), position is reported in units of
//! `x₀ = √(ħ/2mω)`, momentum in `p₀ = √(ħmω/2)` and energy in `ħω`.
//!
//! Basis ordering is part of the public contract: the vibronic state `|S, n⟩`
//! lives at index `S·dim_fock + n` with `S = 0` for ↓ and `S = 1` for ↑.

pub mod closed_form;
pub mod dynamics;
pub mod hilbert;
pub mod scenario;

/// Double-precision complex scalar used for all density matrices.
pub type C64 = num_complex::Complex64;

pub use closed_form::{BranchedFrequency, FrequencyBranch};
pub use dynamics::{DynamicsMode, IntegratorConfig, IntegratorMethod, TimeSeries};
pub use hilbert::{
    MotionalObservable, MotionalStateSpec, RabiTable, TrapParams, VibronicDensityMatrix,
};
