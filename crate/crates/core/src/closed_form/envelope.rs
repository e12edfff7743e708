use serde::{Deserialize, Serialize};

/// Which analytic continuation a frequency from a radicand `r` takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyBranch {
    /// `r > 0`: `v = √r`, trigonometric envelope.
    Oscillatory,
    /// `r ≈ 0`: the `v → 0` limit.
    Critical,
    /// `r < 0`: `v = √|r|`, hyperbolic envelope.
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchedFrequency {
    /// Non-negative, rad/s.
    pub value: f64,
    pub branch: FrequencyBranch,
    /// The radicand the value came from, (rad/s)².
    pub radicand: f64,
}

// Below this |vt| the sin/sinh ratios switch to their two-term series.
const SERIES_CUTOFF: f64 = 1e-4;
// Above this vt the hyperbolic form is evaluated in exponential form.
const EXP_FORM: f64 = 20.0;

impl BranchedFrequency {
    /// Classifies `r = X² − κ²/16`; critical when `|r| ≤ 1e-30·(κ/4)²`.
    pub fn from_radicand(radicand: f64, kappa: f64) -> Self {
        let q = 0.25 * kappa;
        let branch = if radicand.abs() <= 1e-30 * q * q {
            FrequencyBranch::Critical
        } else if radicand > 0.0 {
            FrequencyBranch::Oscillatory
        } else {
            FrequencyBranch::Hyperbolic
        };
        let value = match branch {
            FrequencyBranch::Critical => 0.0,
            _ => radicand.abs().sqrt(),
        };
        BranchedFrequency {
            value,
            branch,
            radicand,
        }
    }

    /// `((a ± b)/2)² − κ²/16` for a given half-sum or half-difference `x`.
    pub fn from_half(x: f64, kappa: f64) -> Self {
        Self::from_radicand(x * x - kappa * kappa / 16.0, kappa)
    }

    /// Undamped envelope `E(t)`: `cos vt + (κ/4v) sin vt`, its hyperbolic
    /// counterpart, or `1 + κt/4` at the critical point. Grows without bound
    /// on the hyperbolic branch; prefer [`Self::damped_envelope`].
    pub fn envelope(&self, kappa: f64, t: f64) -> f64 {
        let q = 0.25 * kappa;
        let v = self.value;
        let x = v * t;
        match self.branch {
            FrequencyBranch::Critical => 1.0 + q * t,
            FrequencyBranch::Oscillatory => x.cos() + q * sin_over_v(v, t),
            FrequencyBranch::Hyperbolic => x.cosh() + q * sinh_over_v(v, t),
        }
    }

    /// `e^{−κt/4} E(t)`, evaluated without overflow on every branch.
    pub fn damped_envelope(&self, kappa: f64, t: f64) -> f64 {
        let q = 0.25 * kappa;
        let v = self.value;
        let x = v * t;
        match self.branch {
            FrequencyBranch::Hyperbolic if x > EXP_FORM => {
                // ½[(1 + q/v)e^{(v−q)t} + (1 − q/v)e^{−(v+q)t}], with v ≤ q.
                let r = q / v;
                0.5 * ((1.0 + r) * ((v - q) * t).exp() + (1.0 - r) * (-(v + q) * t).exp())
            }
            _ => (-q * t).exp() * self.envelope(kappa, t),
        }
    }
}

/// `sin(vt)/v`, exact as `v → 0`.
fn sin_over_v(v: f64, t: f64) -> f64 {
    let x = v * t;
    if x.abs() < SERIES_CUTOFF {
        t * (1.0 - x * x / 6.0)
    } else {
        x.sin() / v
    }
}

/// `sinh(vt)/v`, exact as `v → 0`.
fn sinh_over_v(v: f64, t: f64) -> f64 {
    let x = v * t;
    if x.abs() < SERIES_CUTOFF {
        t * (1.0 + x * x / 6.0)
    } else {
        x.sinh() / v
    }
}
