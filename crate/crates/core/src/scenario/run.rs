use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::output::{write_text, RunStatus, SeriesFile};
use super::{csv_text, parse_str, ScenarioConfig, ScenarioError};
use crate::closed_form::{coherences_of, fit, occupations_of, ClosedForm, RateFit};
use crate::dynamics::{channels as ch, integrate, DynamicsMode, IntegratorStats, TimeSeries, Trajectory};
use crate::hilbert::{compose_initial, initial_state_with_budget, rabi_table};

/// Deviations of `P↓` from ½ smaller than this do not count as a crossing.
pub const CROSSING_FLOOR: f64 = 1e-6;
/// Allowed shortfall of `Δx·Δp` below ħ/2.
pub const HEISENBERG_SLACK: f64 = 1e-8;
/// Allowed rise of `P↓` between samples for a monotone verdict.
const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelVerdict {
    pub name: String,
    pub unit: String,
    pub max_abs_deviation: f64,
    pub time_of_max: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `value <= limit`.
    Upper,
    /// `value >= limit`.
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl CheckVerdict {
    fn new(name: &str, value: f64, limit: f64, bound: Bound) -> Self {
        let pass = match bound {
            Bound::Upper => value <= limit,
            Bound::Lower => value >= limit,
        };
        CheckVerdict {
            name: name.to_string(),
            value,
            limit,
            bound,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub label: String,
    pub config_hash: String,
}

/// Channel-by-channel agreement of a candidate series with a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub reference: SourceInfo,
    pub candidate: SourceInfo,
    pub status: RunStatus,
    pub error: Option<String>,
    pub channels: Vec<ChannelVerdict>,
    pub checks: Vec<CheckVerdict>,
    /// Decay rate of the `P↓ − ½` envelope of the candidate.
    pub envelope_fit: Option<RateFit>,
    /// `κ/4`, the rate on the oscillatory branch.
    pub expected_envelope_rate: Option<f64>,
    pub pass: bool,
}

impl ComparisonReport {
    fn finish(mut self) -> Self {
        self.pass = self.status == RunStatus::Complete
            && self.channels.iter().all(|c| c.pass)
            && self.checks.iter().all(|c| c.pass);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serialises");
        s.push('\n');
        s
    }
}

pub struct ScenarioOutcome {
    pub numeric: TimeSeries,
    /// Closed-form channels, for reduced-JCM runs.
    pub analytic: Option<TimeSeries>,
    pub report: ComparisonReport,
    pub stats: IntegratorStats,
    pub files: Vec<PathBuf>,
}

/// Maximum deviation per channel; `tolerances` lists the channels compared.
/// Samples where either side is NaN are skipped.
pub fn compare_series(
    reference: &TimeSeries,
    candidate: &TimeSeries,
    tolerances: &[(&str, f64)],
) -> Result<Vec<ChannelVerdict>, ScenarioError> {
    let (a, b) = (&reference.times, &candidate.times);
    let scale = a.last().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-12 * scale) {
        return Err(ScenarioError::Input(format!(
            "time grids differ ({} vs {} samples)",
            a.len(),
            b.len()
        )));
    }
    let mut out = Vec::new();
    for &(name, tol) in tolerances {
        let (Some(ra), Some(cb)) = (reference.channel(name), candidate.channel(name)) else {
            return Err(ScenarioError::Input(format!("channel `{name}` missing from one side")));
        };
        let mut worst = 0.0;
        let mut at = 0.0;
        for (i, (x, y)) in ra.values.iter().zip(&cb.values).enumerate() {
            let d = (x - y).abs();
            if d > worst {
                worst = d;
                at = a[i];
            }
        }
        out.push(ChannelVerdict {
            name: name.to_string(),
            unit: ra.unit.clone(),
            max_abs_deviation: worst,
            time_of_max: at,
            tolerance: tol,
            pass: worst <= tol,
        });
    }
    Ok(out)
}

/// Envelope rate of `P↓ − ½` from its peaks, or from a log-linear fit when
/// fewer than three peaks exist.
pub fn envelope_fit(times: &[f64], p_down: &[f64]) -> Option<RateFit> {
    fit::peak_rate(times, p_down, 0.5, 3)
        .or_else(|_| fit::log_linear_rate(times, p_down, 0.5, 0.0, 1e-9))
        .ok()
}

fn numeric_checks(cfg: &ScenarioConfig, s: &TimeSeries) -> Vec<CheckVerdict> {
    let mut out = Vec::new();
    if let Some(u) = s.min_of(ch::UNCERTAINTY_PRODUCT) {
        out.push(CheckVerdict::new("heisenberg_floor", u, 0.5 - HEISENBERG_SLACK, Bound::Lower));
    }
    let c = &cfg.checks;
    if let (Some(tol), Some(e)) = (c.energy_drift, s.values(ch::MEAN_ENERGY)) {
        let drift = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max);
        out.push(CheckVerdict::new("energy_drift", drift, tol, Bound::Upper));
    }
    if let Some(p) = s.values(ch::P_DOWN) {
        let n = fit::crossings(p, 0.5, CROSSING_FLOOR) as f64;
        if let Some(m) = c.max_p_down_crossings {
            out.push(CheckVerdict::new("p_down_crossings_max", n, m as f64, Bound::Upper));
        }
        if let Some(m) = c.min_p_down_crossings {
            out.push(CheckVerdict::new("p_down_crossings_min", n, m as f64, Bound::Lower));
        }
        if c.expect_p_down_monotone {
            let rise = p.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            out.push(CheckVerdict::new("p_down_monotone", rise, MONOTONE_SLACK, Bound::Upper));
        }
    }
    out
}

/// Integrates the scenario and, for reduced-JCM runs, evaluates the closed
/// form on the same grid. Writes nothing.
pub fn simulate(cfg: &ScenarioConfig) -> Result<(Trajectory, Option<TimeSeries>), ScenarioError> {
    let spec = cfg.initial.motional_spec();
    let m = initial_state_with_budget(&spec, cfg.dim_fock, cfg.truncation_budget)?.matrix;
    let rho0 = compose_initial(&m, cfg.dim_fock)?;
    let traj = integrate(&rho0, &cfg.trap, cfg.mode, &cfg.integrator)?;
    let analytic = match cfg.mode {
        DynamicsMode::ReducedJcm => {
            let table = rabi_table(&cfg.trap, cfg.dim_fock + cfg.trap.k_sideband)?;
            let cf = ClosedForm::new(&cfg.trap, &table, &occupations_of(&m), &coherences_of(&m))?;
            Some(cf.series(&traj.series.times)?)
        }
        DynamicsMode::FullCoupling { .. } => None,
    };
    Ok((traj, analytic))
}

fn series_path(dir: &Path, cfg: &ScenarioConfig, kind: &str, ext: &str) -> PathBuf {
    dir.join(format!("{}.{kind}.{ext}", cfg.name))
}

fn emit_series(
    dir: &Path,
    cfg: &ScenarioConfig,
    kind: &str,
    series: &TimeSeries,
    status: RunStatus,
    error: Option<String>,
    files: &mut Vec<PathBuf>,
) -> Result<(), ScenarioError> {
    if cfg.emit.csv {
        let p = series_path(dir, cfg, kind, "csv");
        write_text(&p, &csv_text(series))?;
        files.push(p);
    }
    if cfg.emit.json {
        let p = series_path(dir, cfg, kind, "json");
        write_text(&p, &SeriesFile::new(series, &cfg.name, cfg.canonical_text(), status, error).to_json())?;
        files.push(p);
    }
    Ok(())
}

fn selected(cfg: &ScenarioConfig, s: &TimeSeries) -> TimeSeries {
    let names: Vec<&str> = cfg.outputs.iter().map(String::as_str).collect();
    s.select(&names).expect("channel names validated at parse time")
}

/// Runs `cfg`, writes `<name>.numeric.*`, `<name>.analytic.*` (reduced JCM
/// only) and `<name>.report.json` under `out_dir`.
///
/// If the integrator stops early, the recorded prefix goes to
/// `<name>.numeric.partial.*` and the error lists those files.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioOutcome, ScenarioError> {
    let hash = cfg.hash();
    let mut files = Vec::new();
    let (traj, analytic) = match simulate(cfg) {
        Ok(v) => v,
        Err(ScenarioError::Dynamics(e)) if e.partial().is_some() => {
            let partial = e.partial().expect("checked");
            emit_series(
                out_dir,
                cfg,
                "numeric.partial",
                &selected(cfg, partial),
                RunStatus::Partial,
                Some(e.to_string()),
                &mut files,
            )?;
            return Err(ScenarioError::Run { source: e, written: files });
        }
        Err(e) => return Err(e),
    };

    let numeric = traj.series;
    emit_series(out_dir, cfg, "numeric", &selected(cfg, &numeric), RunStatus::Complete, None, &mut files)?;
    let mut channels = Vec::new();
    if let Some(a) = &analytic {
        emit_series(out_dir, cfg, "analytic", a, RunStatus::Complete, None, &mut files)?;
        let t = &cfg.tolerances;
        channels = compare_series(
            a,
            &numeric,
            &[
                (ch::P_DOWN, t.p_down),
                (ch::MEAN_POSITION, t.mean_position),
                (ch::MEAN_ENERGY, t.mean_energy),
            ],
        )?;
    }
    let report = ComparisonReport {
        scenario: cfg.name.clone(),
        reference: SourceInfo {
            label: "analytic".into(),
            config_hash: hash.clone(),
        },
        candidate: SourceInfo {
            label: numeric.provenance.label().into(),
            config_hash: hash,
        },
        status: RunStatus::Complete,
        error: None,
        channels,
        checks: numeric_checks(cfg, &numeric),
        envelope_fit: numeric.values(ch::P_DOWN).and_then(|p| envelope_fit(&numeric.times, p)),
        expected_envelope_rate: Some(cfg.trap.kappa / 4.0),
        pass: false,
    }
    .finish();
    let p = out_dir.join(format!("{}.report.json", cfg.name));
    write_text(&p, &report.to_json())?;
    files.push(p);

    Ok(ScenarioOutcome {
        numeric,
        analytic,
        report,
        stats: traj.stats,
        files,
    })
}

/// Compares every channel the two files share against one tolerance; `a`
/// is the reference.
pub fn compare(a: &Path, b: &Path, tol: f64) -> Result<ComparisonReport, ScenarioError> {
    if !(tol >= 0.0) {
        return Err(ScenarioError::Input(format!("tolerance must be >= 0, got {tol}")));
    }
    let (fa, fb) = (SeriesFile::read(a)?, SeriesFile::read(b)?);
    let bad = |p: &Path, m: String| ScenarioError::Format {
        path: p.display().to_string(),
        message: m,
    };
    let sa = fa.to_series().map_err(|m| bad(a, m))?;
    let sb = fb.to_series().map_err(|m| bad(b, m))?;
    let shared: Vec<(&str, f64)> = sa
        .channel_names()
        .into_iter()
        .filter(|n| sb.channel(n).is_some())
        .map(|n| (n, tol))
        .collect();
    if shared.is_empty() {
        return Err(ScenarioError::Input("the files share no channel".into()));
    }
    let channels = compare_series(&sa, &sb, &shared)?;
    let partial = fa.status == RunStatus::Partial || fb.status == RunStatus::Partial;
    Ok(ComparisonReport {
        scenario: fb.scenario.clone(),
        reference: SourceInfo {
            label: a.display().to_string(),
            config_hash: fa.config_hash.clone(),
        },
        candidate: SourceInfo {
            label: b.display().to_string(),
            config_hash: fb.config_hash.clone(),
        },
        status: if partial { RunStatus::Partial } else { RunStatus::Complete },
        error: fb.error.clone().or(fa.error.clone()),
        channels,
        checks: Vec::new(),
        envelope_fit: sb.values(ch::P_DOWN).and_then(|p| envelope_fit(&sb.times, p)),
        expected_envelope_rate: parse_str(&fb.config).ok().map(|c| c.trap.kappa / 4.0),
        pass: false,
    }
    .finish())
}
