use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ode::{self, OdeFailure, Stop};
use super::rhs::{frame_energies, interaction_to_lab, Frame, JcmGenerator, SidebandCoupling};
use super::series::{channels as ch, Provenance, TimeSeries};
use super::{DynamicsError, DynamicsMode, IntegratorConfig};
use crate::hilbert::{min_eigenvalue, rabi_table, TrapParams, VibronicDensityMatrix};
use crate::C64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub series: TimeSeries,
    /// State at the last sample time, in the motional lab frame.
    pub final_state: VibronicDensityMatrix,
    pub stats: IntegratorStats,
}

/// Accumulates the standard channels from interaction-frame samples.
struct Sampler {
    dim: usize,
    k: usize,
    omega: f64,
    eigen_stride: usize,
    trace_tol: f64,
    budget: Option<f64>,
    times: Vec<f64>,
    cols: Vec<Vec<f64>>,
}

enum SampleFault {
    Truncation { t: f64, tail: f64, budget: f64 },
    Defect { t: f64, what: String },
}

impl Sampler {
    fn new(dim: usize, params: &TrapParams, cfg: &IntegratorConfig) -> Self {
        let n = cfg.sample_times.len();
        Sampler {
            dim,
            k: params.k_sideband,
            omega: params.omega,
            eigen_stride: cfg.eigen_stride,
            trace_tol: 10.0 * cfg.rel_tol,
            budget: cfg.truncation_budget,
            times: Vec::with_capacity(n),
            cols: vec![Vec::with_capacity(n); ch::STANDARD.len()],
        }
    }

    fn record(&mut self, i: usize, t: f64, y: &DMatrix<C64>) -> Result<(), SampleFault> {
        let d = self.dim;
        let mut p_down = 0.0;
        let mut trace = C64::new(0.0, 0.0);
        let mut number = 0.0;
        let mut parity = 0.0;
        let mut tail = 0.0;
        let tail_from = (d - 1).saturating_sub(self.k);
        for n in 0..d {
            let pd = y[(n, n)];
            let pu = y[(d + n, d + n)];
            trace += pd + pu;
            p_down += pd.re;
            let pop = pd.re + pu.re;
            number += n as f64 * pop;
            parity += if n % 2 == 0 { pop } else { -pop };
            if n >= tail_from {
                tail += pop;
            }
        }
        // ⟨a⟩ and ⟨a²⟩ from the motional block; both frames share
        // populations, the lab frame adds e^{−iωt} per quantum.
        let rho_cm = |m: usize, n: usize| y[(m, n)] + y[(d + m, d + n)];
        let mut a1 = C64::new(0.0, 0.0);
        let mut a2 = C64::new(0.0, 0.0);
        for n in 0..d.saturating_sub(1) {
            a1 += rho_cm(n + 1, n) * ((n + 1) as f64).sqrt();
            if n + 2 < d {
                a2 += rho_cm(n + 2, n) * (((n + 1) * (n + 2)) as f64).sqrt();
            }
        }
        let ph = C64::from_polar(1.0, -self.omega * t);
        a1 *= ph;
        a2 *= ph * ph;
        let tr = trace.re;
        let x = 2.0 * a1.re;
        let p = 2.0 * a1.im;
        let x2 = 2.0 * a2.re + 2.0 * number + tr;
        let p2 = 2.0 * number + tr - 2.0 * a2.re;
        let vx = x2 - x * x;
        let vp = p2 - p * p;
        let purity: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        let herm = crate::hilbert::hermiticity_defect(y);
        let trace_error = (trace - 1.0).norm();
        let min_eig = if self.eigen_stride > 0 && i % self.eigen_stride == 0 {
            min_eigenvalue(y)
        } else {
            f64::NAN
        };

        let row = [
            p_down,
            x,
            p,
            number + 0.5 * tr,
            number,
            parity,
            x2,
            p2,
            vx,
            vp,
            0.5 * (vx * vp).max(0.0).sqrt(),
            purity,
            trace_error,
            herm,
            min_eig,
            tail,
        ];
        self.times.push(t);
        for (c, v) in self.cols.iter_mut().zip(row) {
            c.push(v);
        }

        if let Some(budget) = self.budget {
            if tail > budget {
                return Err(SampleFault::Truncation { t, tail, budget });
            }
        }
        if !(herm <= 1e-10) {
            return Err(SampleFault::Defect {
                t,
                what: format!("hermiticity defect {herm:.3e} above 1e-10"),
            });
        }
        if !(trace_error <= self.trace_tol) {
            return Err(SampleFault::Defect {
                t,
                what: format!("trace error {trace_error:.3e} above {:.1e}", self.trace_tol),
            });
        }
        Ok(())
    }

    fn finish(self, provenance: Provenance) -> TimeSeries {
        let mut s = TimeSeries::new(provenance, self.times);
        for ((name, unit), values) in ch::STANDARD.iter().zip(self.cols) {
            s.push_channel(*name, *unit, values).expect("uniform lengths");
        }
        s
    }
}

/// Propagates `rho0` through `config.sample_times` and records every
/// standard channel at each sample.
pub fn integrate(
    rho0: &VibronicDensityMatrix,
    params: &TrapParams,
    mode: DynamicsMode,
    config: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    params.validate()?;
    config.validate()?;
    let dim = rho0.dim_fock();
    let k = params.k_sideband;

    enum Gen {
        Jcm(JcmGenerator),
        Full(SidebandCoupling),
    }
    let (gen, provenance) = match mode {
        DynamicsMode::ReducedJcm => {
            if dim <= k {
                return Err(DynamicsError::Range(format!(
                    "dim_fock = {dim} leaves no resonant manifold for k = {k}"
                )));
            }
            let table = rabi_table(params, dim - 1)?;
            (
                Gen::Jcm(JcmGenerator::new(params, &table, dim, Frame::Interaction)?),
                Provenance::NumericJcm,
            )
        }
        DynamicsMode::FullCoupling { sideband_cutoff } => {
            if sideband_cutoff < k {
                return Err(DynamicsError::Range(format!(
                    "sideband_cutoff = {sideband_cutoff} is below k = {k}"
                )));
            }
            (
                Gen::Full(SidebandCoupling::new(params, dim, sideband_cutoff)?),
                Provenance::NumericFull,
            )
        }
    };
    let rhs = |t: f64, y: &DMatrix<C64>, out: &mut DMatrix<C64>| match &gen {
        Gen::Jcm(g) => g.apply(y, out),
        Gen::Full(g) => g.apply(t, y, out),
    };

    let mut sampler = Sampler::new(dim, params, config);
    let result = ode::solve(
        rhs,
        rho0.entries().clone(),
        &config.sample_times,
        config,
        |i, t, y| sampler.record(i, t, y),
    );
    match result {
        Ok((y, counts)) => {
            let t_end = *config.sample_times.last().expect("validated non-empty");
            let lab = interaction_to_lab(&y, &frame_energies(params, dim), t_end);
            Ok(Trajectory {
                series: sampler.finish(provenance),
                final_state: VibronicDensityMatrix::from_entries_unchecked(dim, lab),
                stats: IntegratorStats {
                    accepted_steps: counts.accepted,
                    rejected_steps: counts.rejected,
                    rhs_evals: counts.rhs_evals,
                },
            })
        }
        Err(stop) => {
            let partial = Box::new(sampler.finish(provenance));
            Err(match stop {
                Stop::Solver(OdeFailure::StepUnderflow { t, h }) => {
                    DynamicsError::StepUnderflow { t, h, partial }
                }
                Stop::Solver(OdeFailure::MaxSteps { t, steps }) => {
                    DynamicsError::MaxSteps { t, steps, partial }
                }
                Stop::Observer(SampleFault::Truncation { t, tail, budget }) => {
                    DynamicsError::Truncation {
                        t,
                        tail,
                        budget,
                        partial,
                    }
                }
                Stop::Observer(SampleFault::Defect { t, what }) => {
                    DynamicsError::Defect { t, what, partial }
                }
            })
        }
    }
}
