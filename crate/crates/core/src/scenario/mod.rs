//! Configuration-driven runs, κ sweeps, presets and file artifacts.

mod config;
mod expr;
mod output;
mod presets;
mod run;
mod sweep;

pub use config::{
    hash_text, parse_config, parse_str, Checks, ConfigError, Emit, InitialSpec, ScenarioConfig, Tolerances,
    DEFAULT_SAMPLES, KEYS,
};
pub use expr::eval as eval_expression;
pub use output::{csv_text, resolve_out_dir, RunStatus, SeriesChannel, SeriesFile, OUT_DIR_ENV, SERIES_FORMAT};
pub use presets::{headline_numbers, preset, preset_text, HeadlineNumbers, HeadlineRow, Preset, HEADLINE_PRESET, PRESETS};
pub use run::{
    compare, compare_series, envelope_fit, run_scenario, simulate, Bound, ChannelVerdict, CheckVerdict,
    ComparisonReport, ScenarioOutcome, SourceInfo, CROSSING_FLOOR, HEISENBERG_SLACK,
};
pub use sweep::{kappa_grid, sweep_csv_text, sweep_kappa, write_sweep, SweepRow, SweepTable};

use std::path::PathBuf;

use thiserror::Error;

use crate::closed_form::ClosedFormError;
use crate::dynamics::DynamicsError;
use crate::hilbert::HilbertError;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{path}: malformed series file: {message}")]
    Format { path: String, message: String },

    #[error(transparent)]
    Hilbert(#[from] HilbertError),

    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),

    /// Rejected before any time step was taken.
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),

    /// Failed mid-run; the samples recorded so far were written to `written`.
    #[error("integration failed: {source}")]
    Run {
        source: DynamicsError,
        written: Vec<PathBuf>,
    },

    #[error("unknown preset `{name}`{}", .suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownPreset { name: String, suggestion: Option<String> },

    #[error("invalid input: {0}")]
    Input(String),
}

impl ScenarioError {
    /// Whether the failure lies in what the user supplied rather than in the run.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, ScenarioError::Run { .. } | ScenarioError::ClosedForm(_))
    }
}
