use super::envelope::BranchedFrequency;
use super::ClosedFormError;
use crate::dynamics::{channels as ch, Provenance, TimeSeries};
use crate::hilbert::{RabiTable, TrapParams};
use crate::C64;

const NORM_TOL: f64 = 1e-10;

fn check_table(params: &TrapParams, rabi: &RabiTable) -> Result<(), ClosedFormError> {
    if params.k_sideband != rabi.k_sideband {
        return Err(ClosedFormError::Range(format!(
            "Rabi table is for k = {}, parameters have k = {}",
            rabi.k_sideband, params.k_sideband
        )));
    }
    Ok(())
}

fn omega_at(rabi: &RabiTable, n: usize) -> Result<f64, ClosedFormError> {
    rabi.values.get(n).copied().ok_or_else(|| {
        ClosedFormError::Range(format!(
            "manifold {n} outside the Rabi table (covers n < {})",
            rabi.len()
        ))
    })
}

/// `(w_nm, u_nm)` from the radicands `((Ω_n ± Ω_m)/2)² − κ²/16`, where
/// `Ω_n = Ω_{n,n+k}`.
pub fn frequencies(
    n: usize,
    m: usize,
    params: &TrapParams,
    rabi: &RabiTable,
) -> Result<(BranchedFrequency, BranchedFrequency), ClosedFormError> {
    check_table(params, rabi)?;
    let (a, b) = (omega_at(rabi, n)?, omega_at(rabi, m)?);
    let kappa = params.kappa;
    Ok((
        BranchedFrequency::from_half(0.5 * (a + b), kappa),
        BranchedFrequency::from_half(0.5 * (a - b), kappa),
    ))
}

/// `4|Ω_{n,n+k}|`, the coupling at which `w_nn` turns critical.
pub fn kappa_crit(n: usize, rabi: &RabiTable) -> Result<f64, ClosedFormError> {
    Ok(4.0 * omega_at(rabi, n)?.abs())
}

fn check_time(t: f64) -> Result<(), ClosedFormError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(ClosedFormError::InvalidInput(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Precomputed closed-form evaluator for one initial motional state.
#[derive(Debug, Clone)]
pub struct ClosedForm {
    kappa: f64,
    omega: f64,
    k: usize,
    nbar: f64,
    /// `(ρ_nn(0), w_nn)` for every populated manifold.
    populations: Vec<(f64, BranchedFrequency)>,
    /// `(ρ_{n,n+1}(0), √(n+k+1)+√(n+1), √(n+k+1)−√(n+1), u, w)`.
    coherences: Vec<(C64, f64, f64, BranchedFrequency, BranchedFrequency)>,
}

impl ClosedForm {
    /// `diag0` is the initial occupation `ρ^cm_nn(0)`; `coherences0[n]` is
    /// `ρ^cm_{n,n+1}(0)` and may be empty.
    pub fn new(
        params: &TrapParams,
        rabi: &RabiTable,
        diag0: &[f64],
        coherences0: &[C64],
    ) -> Result<Self, ClosedFormError> {
        check_table(params, rabi)?;
        if let Some(v) = diag0.iter().find(|v| !v.is_finite() || **v < -1e-12) {
            return Err(ClosedFormError::InvalidInput(format!("occupation {v} is not a probability")));
        }
        let sum: f64 = diag0.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(ClosedFormError::Unnormalized { sum });
        }
        let kappa = params.kappa;
        let mut populations = Vec::new();
        let mut nbar = 0.0;
        for (n, &p) in diag0.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let o = omega_at(rabi, n)?;
            populations.push((p, BranchedFrequency::from_half(o, kappa)));
            nbar += n as f64 * p;
        }
        let k = params.k_sideband;
        let mut coherences = Vec::new();
        for (n, &c) in coherences0.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let (w, u) = frequencies(n, n + 1, params, rabi)?;
            let (a, b) = (((n + k + 1) as f64).sqrt(), ((n + 1) as f64).sqrt());
            coherences.push((c, a + b, a - b, u, w));
        }
        Ok(ClosedForm {
            kappa,
            omega: params.omega,
            k,
            nbar,
            populations,
            coherences,
        })
    }

    /// `Σ_n ρ_nn(0) e^{−κt/4} E_{w_nn}(t)`.
    fn damped_sum(&self, t: f64) -> f64 {
        self.populations
            .iter()
            .map(|(p, w)| p * w.damped_envelope(self.kappa, t))
            .sum()
    }

    /// Occupancy of the lower internal level.
    pub fn p_down(&self, t: f64) -> Result<f64, ClosedFormError> {
        check_time(t)?;
        Ok(0.5 * (1.0 + self.damped_sum(t)))
    }

    /// Motional energy in units of ħω.
    pub fn mean_energy(&self, t: f64) -> Result<f64, ClosedFormError> {
        check_time(t)?;
        let k = self.k as f64;
        Ok(self.nbar + 0.5 + 0.5 * k - 0.5 * k * self.damped_sum(t))
    }

    /// Mean position in units of x₀, from the nearest-neighbour coherences.
    pub fn mean_position(&self, t: f64) -> Result<f64, ClosedFormError> {
        check_time(t)?;
        let carrier = C64::from_polar(1.0, self.omega * t);
        Ok(self
            .coherences
            .iter()
            .map(|(c, plus, minus, u, w)| {
                let env = plus * u.damped_envelope(self.kappa, t) - minus * w.damped_envelope(self.kappa, t);
                (carrier * c).re * env
            })
            .sum())
    }

    /// Long-time energy `n̄ + ½ + k/2`.
    pub fn energy_asymptote(&self) -> f64 {
        self.nbar + 0.5 + 0.5 * self.k as f64
    }

    /// `p_down`, `mean_energy` and, when coherences were given,
    /// `mean_position` sampled on `times`.
    pub fn series(&self, times: &[f64]) -> Result<TimeSeries, ClosedFormError> {
        let mut s = TimeSeries::new(Provenance::Analytic, times.to_vec());
        let eval = |f: &dyn Fn(f64) -> Result<f64, ClosedFormError>| -> Result<Vec<f64>, ClosedFormError> {
            times.iter().map(|&t| f(t)).collect()
        };
        let push = |s: &mut TimeSeries, name: &str, v: Vec<f64>| {
            s.push_channel(name, ch::unit_of(name).unwrap_or("1"), v).expect("aligned")
        };
        push(&mut s, ch::P_DOWN, eval(&|t| self.p_down(t))?);
        push(&mut s, ch::MEAN_ENERGY, eval(&|t| self.mean_energy(t))?);
        push(&mut s, ch::MEAN_POSITION, eval(&|t| self.mean_position(t))?);
        Ok(s)
    }
}

/// Ground-state occupancy for an initial occupation `diag0`.
pub fn p_down(t: f64, diag0: &[f64], params: &TrapParams, rabi: &RabiTable) -> Result<f64, ClosedFormError> {
    ClosedForm::new(params, rabi, diag0, &[])?.p_down(t)
}

/// [`p_down`] for the Fock state `|n̄⟩`.
pub fn p_down_fock(t: f64, nbar: usize, params: &TrapParams, rabi: &RabiTable) -> Result<f64, ClosedFormError> {
    let mut diag = vec![0.0; nbar + 1];
    diag[nbar] = 1.0;
    p_down(t, &diag, params, rabi)
}

/// Mean position (units of x₀) from `coherences0[n] = ρ^cm_{n,n+1}(0)`.
pub fn mean_position(
    t: f64,
    coherences0: &[C64],
    params: &TrapParams,
    rabi: &RabiTable,
) -> Result<f64, ClosedFormError> {
    ClosedForm::new(params, rabi, &[1.0], coherences0)?.mean_position(t)
}

/// Motional energy (units of ħω) for an initial occupation `diag0`.
pub fn mean_energy(t: f64, diag0: &[f64], params: &TrapParams, rabi: &RabiTable) -> Result<f64, ClosedFormError> {
    ClosedForm::new(params, rabi, diag0, &[])?.mean_energy(t)
}
