//! Explicit Runge-Kutta steppers on complex matrices.
//!
//! The adaptive path is the Dormand-Prince 5(4) pair with FSAL reuse. Steps
//! are shortened to land exactly on each sample time, so sampled states
//! carry the full step accuracy and no interpolant error.

use nalgebra::DMatrix;

use super::{IntegratorConfig, IntegratorMethod};
use crate::C64;

type M = DMatrix<C64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum OdeFailure {
    StepUnderflow { t: f64, h: f64 },
    MaxSteps { t: f64, steps: usize },
}

/// Why integration stopped early: a solver failure or an observer veto.
#[derive(Debug)]
pub(crate) enum Stop<E> {
    Solver(OdeFailure),
    Observer(E),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct Counts {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth- minus fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// `out = y + h Σ c_i k_i`.
fn combine(out: &mut M, y: &M, h: f64, terms: &[(f64, &M)]) {
    let o = out.as_mut_slice();
    o.copy_from_slice(y.as_slice());
    for &(c, k) in terms {
        if c == 0.0 {
            continue;
        }
        let hc = h * c;
        for (oi, ki) in o.iter_mut().zip(k.as_slice()) {
            *oi += ki * hc;
        }
    }
}

/// RMS of `|e_i| / (atol + rtol·max(|a_i|, |b_i|))`.
fn error_norm(e: &M, a: &M, b: &M, atol: f64, rtol: f64) -> f64 {
    let n = e.len() as f64;
    let s: f64 = e
        .iter()
        .zip(a.iter().zip(b.iter()))
        .map(|(ei, (ai, bi))| {
            // norm_sqr avoids hypot, which dominates this loop.
            let sc = atol + rtol * ai.norm_sqr().max(bi.norm_sqr()).sqrt();
            ei.norm_sqr() / (sc * sc)
        })
        .sum();
    (s / n).sqrt()
}

fn scaled_norm(v: &M, y: &M, atol: f64, rtol: f64) -> f64 {
    error_norm(v, y, y, atol, rtol)
}

/// Integrate `y' = f(t, y)` from `times[0]` through every sample time,
/// calling `observe(i, t_i, y_i)` at each (including the initial one).
pub(crate) fn solve<F, O, E>(
    mut f: F,
    y0: M,
    times: &[f64],
    cfg: &IntegratorConfig,
    mut observe: O,
) -> Result<(M, Counts), Stop<E>>
where
    F: FnMut(f64, &M, &mut M),
    O: FnMut(usize, f64, &M) -> Result<(), E>,
{
    observe(0, times[0], &y0).map_err(Stop::Observer)?;
    match cfg.method {
        IntegratorMethod::Dopri5 => dopri5(&mut f, y0, times, cfg, &mut observe),
        IntegratorMethod::Rk4 => rk4(&mut f, y0, times, cfg, &mut observe),
    }
}

fn rk4<F, O, E>(
    f: &mut F,
    mut y: M,
    times: &[f64],
    cfg: &IntegratorConfig,
    observe: &mut O,
) -> Result<(M, Counts), Stop<E>>
where
    F: FnMut(f64, &M, &mut M),
    O: FnMut(usize, f64, &M) -> Result<(), E>,
{
    let max_step = cfg.max_step.unwrap_or(f64::INFINITY);
    let (r, c) = y.shape();
    let z = || M::zeros(r, c);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (z(), z(), z(), z(), z());
    let mut counts = Counts::default();
    for (i, w) in times.windows(2).enumerate() {
        let span = w[1] - w[0];
        let n = (span / max_step).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for j in 0..n {
            if counts.accepted >= cfg.max_steps {
                let t = w[0] + j as f64 * h;
                return Err(Stop::Solver(OdeFailure::MaxSteps { t, steps: counts.accepted }));
            }
            let t = w[0] + j as f64 * h;
            f(t, &y, &mut k1);
            combine(&mut tmp, &y, 0.5 * h, &[(1.0, &k1)]);
            f(t + 0.5 * h, &tmp, &mut k2);
            combine(&mut tmp, &y, 0.5 * h, &[(1.0, &k2)]);
            f(t + 0.5 * h, &tmp, &mut k3);
            combine(&mut tmp, &y, h, &[(1.0, &k3)]);
            f(t + h, &tmp, &mut k4);
            combine(
                &mut tmp,
                &y,
                h / 6.0,
                &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)],
            );
            std::mem::swap(&mut y, &mut tmp);
            counts.accepted += 1;
            counts.rhs_evals += 4;
        }
        observe(i + 1, w[1], &y).map_err(Stop::Observer)?;
    }
    Ok((y, counts))
}

fn initial_step<F>(f: &mut F, t0: f64, y0: &M, f0: &M, cfg: &IntegratorConfig, counts: &mut Counts) -> f64
where
    F: FnMut(f64, &M, &mut M),
{
    let (atol, rtol) = (cfg.abs_tol, cfg.rel_tol);
    let d0 = scaled_norm(y0, y0, atol, rtol);
    let d1 = scaled_norm(f0, y0, atol, rtol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let mut y1 = y0.clone();
    combine(&mut y1, y0, h0, &[(1.0, f0)]);
    let mut f1 = M::zeros(y0.nrows(), y0.ncols());
    f(t0 + h0, &y1, &mut f1);
    counts.rhs_evals += 1;
    let df = &f1 - f0;
    let d2 = scaled_norm(&df, y0, atol, rtol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

fn dopri5<F, O, E>(
    f: &mut F,
    mut y: M,
    times: &[f64],
    cfg: &IntegratorConfig,
    observe: &mut O,
) -> Result<(M, Counts), Stop<E>>
where
    F: FnMut(f64, &M, &mut M),
    O: FnMut(usize, f64, &M) -> Result<(), E>,
{
    let mut counts = Counts::default();
    if times.len() < 2 {
        return Ok((y, counts));
    }
    let (atol, rtol) = (cfg.abs_tol, cfg.rel_tol);
    let max_step = cfg.max_step.unwrap_or(f64::INFINITY);
    let (r, c) = y.shape();
    let z = || M::zeros(r, c);
    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (z(), z(), z(), z(), z(), z(), z());
    let (mut tmp, mut ynew, mut err) = (z(), z(), z());

    let mut t = times[0];
    f(t, &y, &mut k1);
    counts.rhs_evals += 1;
    let span = times[times.len() - 1] - t;
    let mut h = initial_step(f, t, &y, &k1, cfg, &mut counts).min(max_step).min(span);
    let mut last_rejected = false;

    for (i, &target) in times.iter().enumerate().skip(1) {
        while t < target {
            if counts.accepted + counts.rejected >= cfg.max_steps {
                return Err(Stop::Solver(OdeFailure::MaxSteps {
                    t,
                    steps: counts.accepted + counts.rejected,
                }));
            }
            let remaining = target - t;
            // Land exactly on the sample instead of leaving a sliver.
            let (h_try, clipped) = if h >= remaining * (1.0 - 1e-12) {
                (remaining, h > remaining)
            } else {
                (h, false)
            };
            if h_try <= 16.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) {
                return Err(Stop::Solver(OdeFailure::StepUnderflow { t, h: h_try }));
            }

            combine(&mut tmp, &y, h_try, &[(A21, &k1)]);
            f(t + C2 * h_try, &tmp, &mut k2);
            combine(&mut tmp, &y, h_try, &[(A31, &k1), (A32, &k2)]);
            f(t + C3 * h_try, &tmp, &mut k3);
            combine(&mut tmp, &y, h_try, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            f(t + C4 * h_try, &tmp, &mut k4);
            combine(&mut tmp, &y, h_try, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            f(t + C5 * h_try, &tmp, &mut k5);
            combine(
                &mut tmp,
                &y,
                h_try,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            );
            f(t + h_try, &tmp, &mut k6);
            combine(
                &mut ynew,
                &y,
                h_try,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let t_new = if clipped || h_try == remaining { target } else { t + h_try };
            f(t_new, &ynew, &mut k7);
            counts.rhs_evals += 6;

            err.fill(C64::new(0.0, 0.0));
            combine(
                &mut tmp,
                &err,
                h_try,
                &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
            );
            let e = error_norm(&tmp, &y, &ynew, atol, rtol);

            if e <= 1.0 {
                counts.accepted += 1;
                t = t_new;
                std::mem::swap(&mut y, &mut ynew);
                std::mem::swap(&mut k1, &mut k7);
                let mut fac = if e == 0.0 { FAC_MAX } else { SAFETY * e.powf(-0.2) };
                fac = fac.clamp(FAC_MIN, FAC_MAX);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                last_rejected = false;
                h = if clipped && fac >= 1.0 { h } else { h_try * fac };
                h = h.min(max_step);
            } else {
                counts.rejected += 1;
                last_rejected = true;
                let fac = if e.is_finite() {
                    (SAFETY * e.powf(-0.2)).clamp(FAC_MIN, 1.0)
                } else {
                    FAC_MIN
                };
                h = h_try * fac;
            }
        }
        observe(i, target, &y).map_err(Stop::Observer)?;
    }
    Ok((y, counts))
}
