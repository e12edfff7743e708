use serde::{Deserialize, Serialize};

/// Where a series came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    NumericJcm,
    NumericFull,
    Analytic,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::NumericJcm => "numeric-jcm",
            Provenance::NumericFull => "numeric-full",
            Provenance::Analytic => "analytic",
        }
    }
}

/// Standard channel names and their units.
pub mod channels {
    pub const P_DOWN: &str = "p_down";
    pub const MEAN_POSITION: &str = "mean_position";
    pub const MEAN_MOMENTUM: &str = "mean_momentum";
    pub const MEAN_ENERGY: &str = "mean_energy";
    pub const MEAN_NUMBER: &str = "mean_number";
    pub const MEAN_PARITY: &str = "mean_parity";
    pub const MEAN_POSITION_SQ: &str = "mean_position_sq";
    pub const MEAN_MOMENTUM_SQ: &str = "mean_momentum_sq";
    pub const POSITION_VARIANCE: &str = "position_variance";
    pub const MOMENTUM_VARIANCE: &str = "momentum_variance";
    /// `Δx·Δp` in units of ħ; the Heisenberg floor is ½.
    pub const UNCERTAINTY_PRODUCT: &str = "uncertainty_product";
    pub const PURITY: &str = "purity";
    pub const TRACE_ERROR: &str = "trace_error";
    pub const HERMITICITY_DEFECT: &str = "hermiticity_defect";
    pub const MIN_EIGENVALUE: &str = "min_eigenvalue";
    pub const TAIL_MASS: &str = "tail_mass";

    /// Every channel produced by a numeric run, in output order.
    pub const STANDARD: [(&str, &str); 16] = [
        (P_DOWN, "1"),
        (MEAN_POSITION, "x0"),
        (MEAN_MOMENTUM, "p0"),
        (MEAN_ENERGY, "hbar*omega"),
        (MEAN_NUMBER, "1"),
        (MEAN_PARITY, "1"),
        (MEAN_POSITION_SQ, "x0^2"),
        (MEAN_MOMENTUM_SQ, "p0^2"),
        (POSITION_VARIANCE, "x0^2"),
        (MOMENTUM_VARIANCE, "p0^2"),
        (UNCERTAINTY_PRODUCT, "hbar"),
        (PURITY, "1"),
        (TRACE_ERROR, "1"),
        (HERMITICITY_DEFECT, "1"),
        (MIN_EIGENVALUE, "1"),
        (TAIL_MASS, "1"),
    ];

    pub fn unit_of(name: &str) -> Option<&'static str> {
        STANDARD.iter().find(|(n, _)| *n == name).map(|(_, u)| *u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

/// Sampled trajectory of named real observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub provenance: Provenance,
    /// Seconds.
    pub times: Vec<f64>,
    pub channels: Vec<Channel>,
}

impl TimeSeries {
    pub fn new(provenance: Provenance, times: Vec<f64>) -> Self {
        TimeSeries {
            provenance,
            times,
            channels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Adds a channel; its length must match `times`.
    pub fn push_channel(
        &mut self,
        name: impl Into<String>,
        unit: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<(), String> {
        let name = name.into();
        if values.len() != self.times.len() {
            return Err(format!(
                "channel `{name}` has {} samples, series has {}",
                values.len(),
                self.times.len()
            ));
        }
        if self.channel(&name).is_some() {
            return Err(format!("duplicate channel `{name}`"));
        }
        self.channels.push(Channel {
            name,
            unit: unit.into(),
            values,
        });
        Ok(())
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn values(&self, name: &str) -> Option<&[f64]> {
        self.channel(name).map(|c| c.values.as_slice())
    }

    pub fn channel_names(&self) -> Vec<&str> {
        self.channels.iter().map(|c| c.name.as_str()).collect()
    }

    /// Copy keeping only `names`, in that order. Unknown names are errors.
    pub fn select(&self, names: &[&str]) -> Result<TimeSeries, String> {
        let mut out = TimeSeries::new(self.provenance, self.times.clone());
        for &n in names {
            let c = self.channel(n).ok_or_else(|| format!("no channel `{n}`"))?;
            out.channels.push(c.clone());
        }
        Ok(out)
    }

    /// Keeps the first `len` samples of every channel.
    pub fn truncate(&mut self, len: usize) {
        self.times.truncate(len);
        for c in &mut self.channels {
            c.values.truncate(len);
        }
    }

    /// Largest finite value of a channel.
    pub fn max_of(&self, name: &str) -> Option<f64> {
        self.values(name).map(|v| v.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max))
    }

    /// Smallest finite value of a channel.
    pub fn min_of(&self, name: &str) -> Option<f64> {
        self.values(name).map(|v| v.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min))
    }
}
