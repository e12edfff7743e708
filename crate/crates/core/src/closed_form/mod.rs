//! Analytic occupancy, quantum-damped motion and long-time asymptotes.
//!
//! Every formula is a sum over Jaynes-Cummings manifolds of a damped
//! envelope `e^{−κt/4} E(t)`; the branch of each frequency (oscillatory,
//! critical, hyperbolic) is decided from the sign of its radicand so all
//! outputs stay real.

mod asymptotic;
mod envelope;
pub mod fit;
mod formulas;

pub use asymptotic::{
    asymptotic_mean, asymptotic_position_variance, equipartition_check, EquipartitionReport,
    VarianceReport,
};
pub use envelope::{BranchedFrequency, FrequencyBranch};
pub use fit::{RateFit, FitMethod};
pub use formulas::{
    frequencies, kappa_crit, mean_energy, mean_position, p_down, p_down_fock, ClosedForm,
};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::hilbert::HilbertError;
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error(transparent)]
    Hilbert(#[from] HilbertError),

    #[error("range error: {0}")]
    Range(String),

    #[error("initial occupation sums to {sum}, expected 1")]
    Unnormalized { sum: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("series lacks channel `{0}`")]
    MissingChannel(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

/// Diagonal `ρ_nn` of a motional density matrix.
pub fn occupations_of(motional: &DMatrix<C64>) -> Vec<f64> {
    (0..motional.nrows()).map(|n| motional[(n, n)].re).collect()
}

/// Nearest-neighbour coherences `ρ_{n,n+1}`.
pub fn coherences_of(motional: &DMatrix<C64>) -> Vec<C64> {
    (0..motional.nrows().saturating_sub(1))
        .map(|n| motional[(n, n + 1)])
        .collect()
}
