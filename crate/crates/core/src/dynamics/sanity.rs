use serde::{Deserialize, Serialize};

use crate::hilbert::{tail_mass, VibronicDensityMatrix, DEFAULT_TRUNCATION_BUDGET};

/// Diagnostics of a density matrix. Nothing here is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SanityReport {
    pub trace_error: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub tail_mass: f64,
}

impl SanityReport {
    pub const TRACE_TOL: f64 = 1e-12;
    pub const HERMITICITY_TOL: f64 = 1e-12;
    pub const EIGEN_FLOOR: f64 = -1e-10;

    /// Human-readable list of every failed check.
    pub fn violations(&self, budget: f64) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.trace_error <= Self::TRACE_TOL) {
            v.push(format!("trace error {:.3e}", self.trace_error));
        }
        if !(self.hermiticity_defect <= Self::HERMITICITY_TOL) {
            v.push(format!("hermiticity defect {:.3e}", self.hermiticity_defect));
        }
        if !(self.min_eigenvalue >= Self::EIGEN_FLOOR) {
            v.push(format!("min eigenvalue {:.3e}", self.min_eigenvalue));
        }
        if !(self.tail_mass <= budget) {
            v.push(format!("tail mass {:.3e} over budget {budget:.1e}", self.tail_mass));
        }
        v
    }

    pub fn is_valid(&self) -> bool {
        self.violations(DEFAULT_TRUNCATION_BUDGET).is_empty()
    }
}

/// Trace error, Hermiticity defect, smallest eigenvalue and the tail mass
/// above `N_max − k`.
pub fn sanity_report(rho: &VibronicDensityMatrix, k: usize) -> SanityReport {
    SanityReport {
        trace_error: (rho.trace() - 1.0).norm(),
        hermiticity_defect: rho.hermiticity_defect(),
        min_eigenvalue: rho.min_eigenvalue(),
        tail_mass: tail_mass(rho, k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{compose_initial, initial_state, MotionalStateSpec};
    use crate::C64;

    #[test]
    fn valid_state_passes() {
        let m = initial_state(&MotionalStateSpec::Thermal(0.5), 40).unwrap().matrix;
        let r = sanity_report(&compose_initial(&m, 40).unwrap(), 1);
        assert!(r.is_valid(), "{r:?}");
    }

    #[test]
    fn trace_violation_reported() {
        let rho = VibronicDensityMatrix::maximally_mixed(4);
        let e = rho.into_entries() * C64::new(1.1, 0.0);
        let r = sanity_report(&VibronicDensityMatrix::from_entries_unchecked(4, e), 1);
        assert!((r.trace_error - 0.1).abs() < 1e-12);
        assert!(!r.is_valid());
    }

    #[test]
    fn negative_eigenvalue_reported() {
        let mut e = VibronicDensityMatrix::maximally_mixed(2).into_entries();
        e[(0, 0)] = C64::new(0.6, 0.0);
        e[(1, 1)] = C64::new(-0.1, 0.0);
        let r = sanity_report(&VibronicDensityMatrix::from_entries_unchecked(2, e), 0);
        assert!((r.min_eigenvalue + 0.1).abs() < 1e-12);
        assert_eq!(r.violations(1.0).len(), 1);
    }
}
