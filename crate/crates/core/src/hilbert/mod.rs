//! Truncated vibronic Hilbert space and the operators living on it.

mod ladder;
mod observable;
mod params;
mod rabi;
mod state;

pub use ladder::{build_ladder, number_operator};
pub use observable::{expectation, MotionalObservable, ObservableKind, ObservableUnit};
pub use params::{RegimeWarning, TrapParams};
pub use rabi::{
    coupling_matrix, cosine_matrix, rabi_frequency, rabi_table, rabi_table_at_dim, RabiTable,
    MIN_EVAL_DIM,
};
pub use state::{
    compose_initial, default_dim_fock, initial_state, initial_state_with_budget, reduce_internal, reduce_motional,
    tail_mass, MotionalState, MotionalStateSpec, VibronicDensityMatrix, DEFAULT_TRUNCATION_BUDGET,
    DOWN, UP,
};

pub(crate) use state::{hermiticity_defect, min_eigenvalue};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "Fock truncation at dim {dim} leaves tail mass {tail:.3e} above budget {budget:.1e}; \
         need dim_fock >= {required}"
    )]
    Truncation {
        dim: usize,
        tail: f64,
        budget: f64,
        required: usize,
    },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Rabi table did not converge below evaluation dimension {0}")]
    NoConvergence(usize),
}
