use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::write_text;
use super::run::{envelope_fit, simulate, CROSSING_FLOOR};
use super::{ScenarioConfig, ScenarioError};
use crate::closed_form::{fit, frequencies, kappa_crit, FrequencyBranch, RateFit};
use crate::dynamics::{channels as ch, uniform_grid};
use crate::hilbert::rabi_table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kappa: f64,
    pub kappa_over_crit: f64,
    /// Branch of `w_{cc}` for the reference manifold `c`.
    pub branch: FrequencyBranch,
    pub radicand: f64,
    pub fit: Option<RateFit>,
    pub expected_rate: f64,
    /// Sign changes of `P↓ − ½` within `window` seconds.
    pub crossings: Option<usize>,
    pub window: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub scenario: String,
    pub config_hash: String,
    pub crit_manifold: usize,
    pub kappa_crit: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// First row from which every later row shows no crossing.
    pub fn frozen_from(&self) -> Option<usize> {
        let i = self
            .rows
            .iter()
            .rposition(|r| r.crossings != Some(0))
            .map_or(0, |i| i + 1);
        (i < self.rows.len()).then_some(i)
    }

    /// First row on the hyperbolic (or critical) branch.
    pub fn branch_flip(&self) -> Option<usize> {
        self.rows.iter().position(|r| r.branch != FrequencyBranch::Oscillatory)
    }
}

/// `steps` points from `start` to `stop`, linear or logarithmic.
pub fn kappa_grid(start: f64, stop: f64, steps: usize, log: bool) -> Result<Vec<f64>, ScenarioError> {
    let bad = |m: String| Err(ScenarioError::Input(m));
    if steps < 2 {
        return bad(format!("need at least 2 steps, got {steps}"));
    }
    if !(start.is_finite() && stop.is_finite() && start >= 0.0 && stop > start) {
        return bad(format!("need 0 <= start < stop, got {start}:{stop}"));
    }
    if log && start <= 0.0 {
        return bad("a log grid needs start > 0".into());
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            let f = i as f64 / last;
            if i == steps - 1 {
                stop
            } else if log {
                start * (stop / start).powf(f)
            } else {
                start + (stop - start) * f
            }
        })
        .collect())
}

/// One integration per κ, run in parallel; rows come back in grid order.
/// A failing row records its error and the sweep continues.
pub fn sweep_kappa(config: &ScenarioConfig, grid: &[f64]) -> Result<SweepTable, ScenarioError> {
    if grid.is_empty() {
        return Err(ScenarioError::Input("empty κ grid".into()));
    }
    if grid.iter().any(|k| !(*k >= 0.0 && k.is_finite())) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ScenarioError::Input("κ grid must be non-negative and strictly ascending".into()));
    }
    let c = config.crit_manifold;
    let table = rabi_table(&config.trap, c + config.trap.k_sideband)?;
    let kc = kappa_crit(c, &table)?;
    let window = 10.0 / table.values[c].abs();

    let rows = grid
        .par_iter()
        .map(|&kappa| {
            let mut cfg = config.clone();
            cfg.trap.kappa = kappa;
            let (w, _) = frequencies(c, c, &cfg.trap, &table).expect("manifold in table");
            let mut row = SweepRow {
                kappa,
                kappa_over_crit: kappa / kc,
                branch: w.branch,
                radicand: w.radicand,
                fit: None,
                expected_rate: kappa / 4.0,
                crossings: None,
                window,
                error: None,
            };
            if cfg.t_end_auto {
                match cfg.auto_t_end() {
                    Ok(t) => cfg.integrator.sample_times = uniform_grid(t.max(window), cfg.samples()),
                    Err(e) => {
                        row.error = Some(e.to_string());
                        return row;
                    }
                }
            }
            match simulate(&cfg) {
                Ok((traj, _)) => {
                    let s = traj.series;
                    let p = s.values(ch::P_DOWN).expect("standard channel");
                    row.fit = envelope_fit(&s.times, p);
                    let n = s.times.iter().take_while(|t| **t <= window * (1.0 + 1e-12)).count();
                    row.crossings = Some(fit::crossings(&p[..n], 0.5, CROSSING_FLOOR));
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();

    Ok(SweepTable {
        scenario: config.name.clone(),
        config_hash: config.hash(),
        crit_manifold: c,
        kappa_crit: kc,
        rows,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

pub fn sweep_csv_text(table: &SweepTable) -> String {
    let mut out = String::from(
        "kappa[1/s],kappa_over_crit[1],branch,radicand[rad^2/s^2],fitted_rate[1/s],rate_ci_low[1/s],\
         rate_ci_high[1/s],fit_method,expected_rate[1/s],crossings[1],window[s],error\n",
    );
    for r in &table.rows {
        let method = r.fit.map(|f| format!("{:?}", f.method).to_lowercase()).unwrap_or_default();
        let branch = format!("{:?}", r.branch).to_lowercase();
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{branch},{:.16e},{},{},{},{method},{:.16e},{},{:.16e},{}",
            r.kappa,
            r.kappa_over_crit,
            r.radicand,
            opt(r.fit.map(|f| f.rate)),
            opt(r.fit.map(|f| f.ci_low)),
            opt(r.fit.map(|f| f.ci_high)),
            r.expected_rate,
            r.crossings.map(|c| c.to_string()).unwrap_or_default(),
            r.window,
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        );
    }
    out
}

/// Writes `<name>.sweep.csv` and `<name>.sweep.json`.
pub fn write_sweep(table: &SweepTable, out_dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    let csv = out_dir.join(format!("{}.sweep.csv", table.scenario));
    write_text(&csv, &sweep_csv_text(table))?;
    let json = out_dir.join(format!("{}.sweep.json", table.scenario));
    let mut text = serde_json::to_string_pretty(table).expect("plain data serialises");
    text.push('\n');
    write_text(&json, &text)?;
    Ok(vec![csv, json])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = kappa_grid(1.0, 16.0, 5, true).unwrap();
        for (a, b) in g.iter().zip([1.0, 2.0, 4.0, 8.0, 16.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(kappa_grid(0.0, 1.0, 3, false).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(kappa_grid(0.0, 1.0, 3, true).is_err());
        assert!(kappa_grid(2.0, 1.0, 3, false).is_err());
    }
}
