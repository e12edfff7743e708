use serde::{Deserialize, Serialize};

use super::ClosedFormError;
use crate::dynamics::{channels as ch, TimeSeries};
use crate::hilbert::MotionalObservable;

fn check_diag(diag0: &[f64]) -> Result<(), ClosedFormError> {
    let sum: f64 = diag0.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(ClosedFormError::Unnormalized { sum });
    }
    Ok(())
}

/// Long-time expectation `½ Σ_n (⟨n|O|n⟩ + ⟨n+k|O|n+k⟩) ρ_nn(0)`.
pub fn asymptotic_mean(obs: &MotionalObservable, diag0: &[f64], k: usize) -> Result<f64, ClosedFormError> {
    check_diag(diag0)?;
    let mut total = 0.0;
    for (n, &p) in diag0.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let (lo, hi) = (obs.diagonal_element(n), obs.diagonal_element(n + k));
        match (lo, hi) {
            (Some(a), Some(b)) => total += 0.5 * (a + b) * p,
            _ => {
                return Err(ClosedFormError::Range(format!(
                    "observable of dimension {} does not cover n + k = {}",
                    obs.dim(),
                    n + k
                )))
            }
        }
    }
    Ok(total)
}

/// Long-time position variance, in units of x₀², by two routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    /// From the long-time means of x² and x: `2(n̄ + ½ + k/2)`.
    pub from_asymptotic_means: f64,
    /// The alternative closed expression with prefactor 4: `4(n̄ + ½ + k/2)`.
    pub prefactor_four: f64,
}

impl VarianceReport {
    pub fn ratio(&self) -> f64 {
        self.prefactor_four / self.from_asymptotic_means
    }
}

pub fn asymptotic_position_variance(diag0: &[f64], k: usize) -> Result<VarianceReport, ClosedFormError> {
    check_diag(diag0)?;
    // ⟨n|x²|n⟩ = 2n + 1 and every diagonal element of x vanishes.
    let mean_sq: f64 = diag0
        .iter()
        .enumerate()
        .map(|(n, p)| 0.5 * ((2 * n + 1) as f64 + (2 * (n + k) + 1) as f64) * p)
        .sum();
    let nbar: f64 = diag0.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let level = nbar + 0.5 + 0.5 * k as f64;
    debug_assert!((mean_sq - 2.0 * level).abs() < 1e-9 * level.max(1.0));
    Ok(VarianceReport {
        from_asymptotic_means: mean_sq,
        prefactor_four: 4.0 * level,
    })
}

/// Equipartition diagnostics over the tail of a series, energies in ħω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquipartitionReport {
    pub tail_samples: usize,
    /// Tail means of `⟨H⟩/2`, `⟨x²⟩/4` (potential) and `⟨p²⟩/4` (kinetic).
    pub half_energy: f64,
    pub potential: f64,
    pub kinetic: f64,
    /// Largest pairwise gap among the three at any tail sample.
    pub max_deviation: f64,
    /// Largest max − min of any of the three across the tail.
    pub max_spread: f64,
    /// Largest change of any of the three from its first sample, over the
    /// whole series.
    pub max_change_from_start: f64,
    /// Whether the three have settled (spread within [`Self::SETTLED_TOL`]).
    pub converged: bool,
}

impl EquipartitionReport {
    pub const SETTLED_TOL: f64 = 1e-4;
}

pub fn equipartition_check(series: &TimeSeries, tail_fraction: f64) -> Result<EquipartitionReport, ClosedFormError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(ClosedFormError::InvalidInput(format!(
            "tail_fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let get = |name: &str| {
        series
            .values(name)
            .ok_or_else(|| ClosedFormError::MissingChannel(name.to_string()))
    };
    let (h, x2, p2) = (get(ch::MEAN_ENERGY)?, get(ch::MEAN_POSITION_SQ)?, get(ch::MEAN_MOMENTUM_SQ)?);
    let n = series.len();
    if n == 0 {
        return Err(ClosedFormError::InvalidInput("empty series".into()));
    }
    let tail = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    let triple = |i: usize| [0.5 * h[i], 0.25 * x2[i], 0.25 * p2[i]];

    let mut sums = [0.0; 3];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut max_deviation: f64 = 0.0;
    for i in n - tail..n {
        let q = triple(i);
        for j in 0..3 {
            sums[j] += q[j];
            lo[j] = lo[j].min(q[j]);
            hi[j] = hi[j].max(q[j]);
        }
        let gap = (q[0] - q[1]).abs().max((q[0] - q[2]).abs()).max((q[1] - q[2]).abs());
        max_deviation = max_deviation.max(gap);
    }
    let first = triple(0);
    let mut max_change: f64 = 0.0;
    for i in 0..n {
        let q = triple(i);
        for j in 0..3 {
            max_change = max_change.max((q[j] - first[j]).abs());
        }
    }
    let max_spread = (0..3).map(|j| hi[j] - lo[j]).fold(0.0, f64::max);
    let m = tail as f64;
    Ok(EquipartitionReport {
        tail_samples: tail,
        half_energy: sums[0] / m,
        potential: sums[1] / m,
        kinetic: sums[2] / m,
        max_deviation,
        max_spread,
        max_change_from_start: max_change,
        converged: max_spread <= EquipartitionReport::SETTLED_TOL,
    })
}
