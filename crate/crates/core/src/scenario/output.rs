//! CSV and JSON artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{hash_text, parse_str, ScenarioError};
use crate::dynamics::{Provenance, TimeSeries};

/// Overrides the default output directory.
pub const OUT_DIR_ENV: &str = "ZENOTRAP_OUT_DIR";

pub const SERIES_FORMAT: &str = "zenotrap-series-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    /// Stopped early; only the recorded prefix is present.
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesChannel {
    pub name: String,
    pub unit: String,
    /// `null` where the channel was not evaluated.
    pub values: Vec<Option<f64>>,
}

/// JSON form of a series with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFile {
    pub format: String,
    pub scenario: String,
    pub provenance: Provenance,
    pub status: RunStatus,
    pub error: Option<String>,
    pub config_hash: String,
    /// Canonical configuration text; hashing it reproduces `config_hash`.
    pub config: String,
    pub times: Vec<f64>,
    pub channels: Vec<SeriesChannel>,
}

impl SeriesFile {
    pub fn new(series: &TimeSeries, scenario: &str, config: String, status: RunStatus, error: Option<String>) -> Self {
        SeriesFile {
            format: SERIES_FORMAT.to_string(),
            scenario: scenario.to_string(),
            provenance: series.provenance,
            status,
            error,
            config_hash: hash_text(&config),
            config,
            times: series.times.clone(),
            channels: series
                .channels
                .iter()
                .map(|c| SeriesChannel {
                    name: c.name.clone(),
                    unit: c.unit.clone(),
                    values: c.values.iter().map(|v| v.is_finite().then_some(*v)).collect(),
                })
                .collect(),
        }
    }

    pub fn to_series(&self) -> Result<TimeSeries, String> {
        let mut s = TimeSeries::new(self.provenance, self.times.clone());
        for c in &self.channels {
            let v = c.values.iter().map(|x| x.unwrap_or(f64::NAN)).collect();
            s.push_channel(&c.name, &c.unit, v)?;
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serialises");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self, ScenarioError> {
        let text = read_text(path)?;
        let file: SeriesFile = serde_json::from_str(&text).map_err(|e| ScenarioError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if file.format != SERIES_FORMAT {
            return Err(ScenarioError::Format {
                path: path.display().to_string(),
                message: format!("format `{}`, expected `{SERIES_FORMAT}`", file.format),
            });
        }
        Ok(file)
    }

    /// Re-parses the embedded configuration and returns its hash.
    pub fn recomputed_hash(&self) -> Result<String, ScenarioError> {
        Ok(parse_str(&self.config)?.hash())
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), ScenarioError> {
    let io = |e: std::io::Error| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

/// `t_seconds` then each channel as `name[unit]`, 17 significant digits.
pub fn csv_text(series: &TimeSeries) -> String {
    let mut out = String::from("t_seconds");
    for c in &series.channels {
        let _ = write!(out, ",{}[{}]", c.name, c.unit);
    }
    out.push('\n');
    for (i, t) in series.times.iter().enumerate() {
        let _ = write!(out, "{t:.16e}");
        for c in &series.channels {
            let _ = write!(out, ",{:.16e}", c.values[i]);
        }
        out.push('\n');
    }
    out
}

/// `explicit`, else `$ZENOTRAP_OUT_DIR`, else `./zenotrap-out`.
pub fn resolve_out_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("zenotrap-out"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut s = TimeSeries::new(Provenance::Analytic, vec![0.0, 0.5]);
        s.push_channel("p_down", "1", vec![1.0, f64::NAN]).unwrap();
        let text = csv_text(&s);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t_seconds,p_down[1]");
        assert_eq!(lines[1], "0.0000000000000000e0,1.0000000000000000e0");
        assert_eq!(lines[2], "5.0000000000000000e-1,NaN");
    }

    #[test]
    fn json_keeps_nan_as_null() {
        let mut s = TimeSeries::new(Provenance::NumericJcm, vec![0.0, 1.0]);
        s.push_channel("min_eigenvalue", "1", vec![0.0, f64::NAN]).unwrap();
        let f = SeriesFile::new(&s, "x", String::new(), RunStatus::Complete, None);
        let text = f.to_json();
        assert!(text.contains("null"));
        let back: SeriesFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert!(back.to_series().unwrap().values("min_eigenvalue").unwrap()[1].is_nan());
    }
}
