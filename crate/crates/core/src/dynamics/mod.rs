//! Time evolution of the measured master equation.
//!
//! Integration always runs in the interaction frame of
//! `D = ω a†a − kω|↑⟩⟨↑|`, where the resonant generator is time independent
//! and the full coupling oscillates only at integer multiples of ω. Sampled
//! states are rotated back to the motional lab frame (see [`Frame`]) before
//! observables are taken, so motional coherences carry their `e^{−iωt}`
//! phases.

mod evolve;
mod ode;
mod rhs;
mod sanity;
mod series;

pub use evolve::{integrate, IntegratorStats, Trajectory};
pub use rhs::{full_rhs, jcm_rhs, Frame, JcmGenerator, SidebandCoupling};
pub use sanity::{sanity_report, SanityReport};
pub use series::{channels, Channel, Provenance, TimeSeries};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{HilbertError, DEFAULT_TRUNCATION_BUDGET};

#[derive(Debug, Error, Clone)]
pub enum DynamicsError {
    #[error(transparent)]
    Hilbert(#[from] HilbertError),

    #[error("range error: {0}")]
    Range(String),

    #[error("invalid integrator configuration: {0}")]
    Config(String),

    #[error("step size underflow at t = {t:.6e} s (h = {h:.3e} s); problem too stiff for tolerances")]
    StepUnderflow {
        t: f64,
        h: f64,
        partial: Box<TimeSeries>,
    },

    #[error("step budget of {steps} exhausted at t = {t:.6e} s")]
    MaxSteps {
        t: f64,
        steps: usize,
        partial: Box<TimeSeries>,
    },

    #[error("truncation insufficient at t = {t:.6e} s: tail mass {tail:.3e} exceeds budget {budget:.1e}")]
    Truncation {
        t: f64,
        tail: f64,
        budget: f64,
        partial: Box<TimeSeries>,
    },

    #[error("sampled state at t = {t:.6e} s failed check: {what}")]
    Defect {
        t: f64,
        what: String,
        partial: Box<TimeSeries>,
    },
}

impl DynamicsError {
    /// Samples recorded before a run-time failure, if any.
    pub fn partial(&self) -> Option<&TimeSeries> {
        match self {
            DynamicsError::StepUnderflow { partial, .. }
            | DynamicsError::MaxSteps { partial, .. }
            | DynamicsError::Truncation { partial, .. }
            | DynamicsError::Defect { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// Which generator drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DynamicsMode {
    /// Resonant manifolds `{|↓,n⟩, |↑,n+k⟩}` only.
    ReducedJcm,
    /// Every sideband `|Δn| ≤ sideband_cutoff` of the standing-wave cosine.
    FullCoupling { sideband_cutoff: usize },
}

impl DynamicsMode {
    /// Full coupling with the default cutoff `k + 4`.
    pub fn full_default(k: usize) -> Self {
        DynamicsMode::FullCoupling {
            sideband_cutoff: k + 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorMethod {
    /// Dormand-Prince 5(4) with adaptive steps.
    Dopri5,
    /// Classical fourth-order Runge-Kutta on a fixed grid.
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: IntegratorMethod,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper bound on the step, seconds. Required for [`IntegratorMethod::Rk4`].
    pub max_step: Option<f64>,
    /// Strictly increasing, starting at 0, seconds.
    pub sample_times: Vec<f64>,
    /// Tail-mass budget checked at every sample; `None` disables the check.
    pub truncation_budget: Option<f64>,
    /// Evaluate the smallest eigenvalue every `eigen_stride` samples
    /// (the channel holds NaN elsewhere). `0` disables it entirely.
    pub eigen_stride: usize,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: IntegratorMethod::Dopri5,
            abs_tol: 1e-12,
            rel_tol: 1e-9,
            max_step: None,
            sample_times: vec![0.0],
            truncation_budget: Some(DEFAULT_TRUNCATION_BUDGET),
            eigen_stride: 1,
            max_steps: 5_000_000,
        }
    }
}

impl IntegratorConfig {
    /// Default settings sampling `samples` uniform points on `[0, t_end]`.
    pub fn uniform(t_end: f64, samples: usize) -> Self {
        IntegratorConfig {
            sample_times: uniform_grid(t_end, samples),
            ..Self::default()
        }
    }

    pub fn with_times(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::Config(m));
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return bad(format!("abs_tol must be positive, got {}", self.abs_tol));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return bad(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        match self.max_step {
            Some(h) if !(h > 0.0) => return bad(format!("max_step must be positive, got {h}")),
            None if self.method == IntegratorMethod::Rk4 => {
                return bad("rk4 needs max_step".into())
            }
            _ => {}
        }
        if let Some(b) = self.truncation_budget {
            if !(b > 0.0) {
                return bad(format!("truncation_budget must be positive, got {b}"));
            }
        }
        let t = &self.sample_times;
        if t.first() != Some(&0.0) {
            return bad("sample_times must start at 0".into());
        }
        if let Some(w) = t.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return bad(format!("sample_times not strictly increasing at {} -> {}", w[0], w[1]));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        Ok(())
    }
}

/// `samples` uniform points from 0 to `t_end` inclusive.
pub fn uniform_grid(t_end: f64, samples: usize) -> Vec<f64> {
    if samples < 2 {
        return vec![0.0];
    }
    let last = (samples - 1) as f64;
    (0..samples).map(|i| t_end * i as f64 / last).collect()
}
