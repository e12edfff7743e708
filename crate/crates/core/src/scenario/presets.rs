use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::nearest;
use super::output::write_text;
use super::{parse_str, ScenarioConfig, ScenarioError};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fock0-rabi",
        description: "Fock(0), k = 1, kappa = 0.05 kappa_crit: damped Rabi oscillation",
        text: include_str!("../../presets/fock0-rabi.cfg"),
    },
    Preset {
        name: "fock0-zeno",
        description: "Fock(0), k = 1, kappa = 4 kappa_crit: overdamped, monotone occupancy",
        text: include_str!("../../presets/fock0-zeno.cfg"),
    },
    Preset {
        name: "k0-qnd",
        description: "coherent(1), k = 0, kappa = 1e6 1/s: motional energy conserved",
        text: include_str!("../../presets/k0-qnd.cfg"),
    },
    Preset {
        name: "coherent-damping",
        description: "coherent(1), k = 1, kappa = 0.1 omega0: mean position decays at kappa/4",
        text: include_str!("../../presets/coherent-damping.cfg"),
    },
];

/// Name of the arithmetic-only preset served by [`headline_numbers`].
pub const HEADLINE_PRESET: &str = "headline-numbers";

fn unknown(name: &str) -> ScenarioError {
    ScenarioError::UnknownPreset {
        name: name.to_string(),
        suggestion: nearest(name, PRESETS.iter().map(|p| p.name).chain([HEADLINE_PRESET])),
    }
}

pub fn preset_text(name: &str) -> Result<&'static str, ScenarioError> {
    PRESETS.iter().find(|p| p.name == name).map(|p| p.text).ok_or_else(|| unknown(name))
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    Ok(parse_str(preset_text(name)?)?)
}

/// One computed quantity beside its published value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadlineRow {
    pub quantity: String,
    pub unit: String,
    pub computed: f64,
    pub stated: Option<f64>,
    /// Half a unit in the last printed digit of `stated`.
    pub rounding: Option<f64>,
    pub agrees: Option<bool>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadlineNumbers {
    pub kappa: f64,
    pub stated_ratio: f64,
    pub rows: Vec<HeadlineRow>,
}

impl HeadlineNumbers {
    pub fn row(&self, quantity: &str) -> Option<&HeadlineRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    /// Every row with a stated value agrees.
    pub fn all_agree(&self) -> bool {
        self.rows.iter().all(|r| r.agrees != Some(false))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serialises");
        s.push('\n');
        s
    }

    /// Writes `headline-numbers.json` under `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, ScenarioError> {
        let p = out_dir.join(format!("{HEADLINE_PRESET}.json"));
        write_text(&p, &self.to_json())?;
        Ok(p)
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<14} {:>14} {:>14} {:>7}  {}\n",
            "quantity", "computed", "stated", "agrees", "note"
        );
        for r in &self.rows {
            let stated = r.stated.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into());
            let agrees = match r.agrees {
                Some(true) => "yes",
                Some(false) => "NO",
                None => "-",
            };
            let _ = writeln!(
                out,
                "{:<14} {:>14} {:>14} {:>7}  {} [{}]",
                r.quantity,
                format!("{:.4e}", r.computed),
                stated,
                agrees,
                r.note,
                r.unit
            );
        }
        out
    }
}

fn row(quantity: &str, unit: &str, computed: f64, stated: Option<(f64, f64)>, note: String) -> HeadlineRow {
    HeadlineRow {
        quantity: quantity.into(),
        unit: unit.into(),
        computed,
        stated: stated.map(|s| s.0),
        rounding: stated.map(|s| s.1),
        agrees: stated.map(|(v, r)| (computed - v).abs() <= r),
        note,
    }
}

/// Arithmetic behind the published lifetime and coupling ratio, for
/// κ = 4.9e4 1/s and the ratio κ/κ_crit = 2.1e-2.
pub fn headline_numbers() -> HeadlineNumbers {
    let kappa = 4.9e4;
    let ratio = 2.1e-2;
    let tau = 4.0 / kappa;
    let tau_stated = 816e-6;
    let tau_measured = 84e-6;
    let omega01 = kappa / (4.0 * ratio);
    let kappa_crit = 4.0 * omega01;
    let rows = vec![
        row("kappa", "1/s", kappa, Some((4.9e4, 0.05e4)), "input".into()),
        row(
            "tau=4/kappa",
            "s",
            tau,
            Some((tau_stated, 0.5e-6)),
            format!("stated lifetime is {:.3}x the computed 4/kappa", tau_stated / tau),
        ),
        row(
            "tau_measured",
            "s",
            tau,
            Some((tau_measured, 0.5e-6)),
            format!(
                "measured |down,0> -> |up,1> lifetime; 4/kappa differs by {:.1}%",
                100.0 * (tau - tau_measured).abs() / tau_measured
            ),
        ),
        row("omega01", "rad/s", omega01, None, "kappa / (4 * ratio)".into()),
        row("kappa_crit01", "1/s", kappa_crit, None, "4 * omega01".into()),
        row(
            "ratio",
            "1",
            kappa / kappa_crit,
            Some((ratio, 0.05e-2)),
            "kappa / kappa_crit01 recomputed".into(),
        ),
    ];
    HeadlineNumbers {
        kappa,
        stated_ratio: ratio,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses() {
        for p in PRESETS {
            let c = preset(p.name).unwrap();
            assert_eq!(c.name, p.name);
        }
        match preset("fock0-rabbi") {
            Err(ScenarioError::UnknownPreset { suggestion, .. }) => {
                assert_eq!(suggestion.as_deref(), Some("fock0-rabi"))
            }
            _ => panic!("expected unknown preset"),
        }
    }

    #[test]
    fn headline_arithmetic() {
        let h = headline_numbers();
        let tau = h.row("tau=4/kappa").unwrap();
        assert!((tau.computed - 81.632_653_061_224_49e-6).abs() < 1e-18);
        assert_eq!(tau.agrees, Some(false));
        let r = h.row("ratio").unwrap();
        assert!((r.computed - 0.021).abs() < 1e-15);
        assert_eq!(r.agrees, Some(true));
        let w = h.row("omega01").unwrap().computed;
        assert!((w - 583_333.333_333_333_3).abs() < 1e-6);
        assert!(!h.all_agree());
        assert!(h.render().contains("NO"));
    }
}
