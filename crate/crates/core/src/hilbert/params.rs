use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::HilbertError;

/// Physical parameters of the measured trapped-ion model, angular units.
///
/// The laser frequency is implied: `ω_L = ω₂₁ + k·ω` (blue sideband of order
/// `k_sideband`). All dynamics are evaluated in frames rotating at `ω_L`, so
/// `omega21` only fixes that resonance condition and never reaches an
/// observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapParams {
    /// Trap angular frequency ω, rad/s.
    pub omega: f64,
    /// Electronic transition angular frequency ω₂₁, rad/s.
    pub omega21: f64,
    /// Fundamental Rabi angular frequency Ω₀, rad/s.
    pub omega0: f64,
    /// Lamb-Dicke parameter η.
    pub eta: f64,
    /// Standing-wave phase φ, rad.
    pub phi: f64,
    /// Blue sideband order k.
    pub k_sideband: usize,
    /// Measurement coupling κ, 1/s.
    pub kappa: f64,
}

/// Soft regime violations; the model still runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegimeWarning {
    /// `Ω₀/ω` exceeds 0.1, so the low-excitation / JCM approximation is suspect.
    LowExcitationViolated { ratio: f64 },
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeWarning::LowExcitationViolated { ratio } => write!(
                f,
                "omega0/omega = {ratio:.3} > 0.1: low-excitation regime (omega >> omega0) not satisfied"
            ),
        }
    }
}

impl TrapParams {
    /// Ion at the node of the standing wave (φ = −π/2), first blue sideband,
    /// no measurement.
    pub fn node(omega: f64, omega0: f64, eta: f64) -> Self {
        TrapParams {
            omega,
            omega21: 0.0,
            omega0,
            eta,
            phi: -FRAC_PI_2,
            k_sideband: 1,
            kappa: 0.0,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_sideband(mut self, k: usize) -> Self {
        self.k_sideband = k;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    /// Laser angular frequency on the k-th blue sideband.
    pub fn laser_frequency(&self) -> f64 {
        self.omega21 + self.k_sideband as f64 * self.omega
    }

    pub fn validate(&self) -> Result<(), HilbertError> {
        let check = |name, value: f64, ok: bool, reason| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(HilbertError::InvalidParameter {
                    name,
                    value,
                    reason,
                })
            }
        };
        check("omega", self.omega, self.omega > 0.0, "must be > 0")?;
        check("omega21", self.omega21, true, "must be finite")?;
        check("omega0", self.omega0, self.omega0 >= 0.0, "must be >= 0")?;
        check("eta", self.eta, self.eta >= 0.0, "must be >= 0")?;
        check("phi", self.phi, true, "must be finite")?;
        check("kappa", self.kappa, self.kappa >= 0.0, "must be >= 0")?;
        Ok(())
    }

    pub fn regime_warnings(&self) -> Vec<RegimeWarning> {
        let ratio = self.omega0 / self.omega;
        let mut out = Vec::new();
        if ratio > 0.1 {
            out.push(RegimeWarning::LowExcitationViolated { ratio });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_names_the_field() {
        let p = TrapParams::node(1.0, 0.01, 0.2).with_kappa(-1.0);
        match p.validate() {
            Err(HilbertError::InvalidParameter { name, .. }) => assert_eq!(name, "kappa"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(TrapParams::node(0.0, 0.01, 0.2).validate().is_err());
        assert!(TrapParams::node(1.0, 0.01, 0.2).validate().is_ok());
    }

    #[test]
    fn regime_flag_above_tenth() {
        assert!(TrapParams::node(1.0, 0.05, 0.2).regime_warnings().is_empty());
        assert_eq!(TrapParams::node(1.0, 0.2, 0.2).regime_warnings().len(), 1);
    }

    #[test]
    fn laser_sits_on_blue_sideband() {
        let mut p = TrapParams::node(2.0, 0.01, 0.2).with_sideband(3);
        p.omega21 = 100.0;
        assert_eq!(p.laser_frequency(), 106.0);
    }
}
