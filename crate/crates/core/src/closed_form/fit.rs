//! Decay-rate estimates for damped signals.

use serde::{Deserialize, Serialize};

use super::ClosedFormError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Log-linear regression through the local maxima of `|s − baseline|`.
    Peaks,
    /// Log-linear regression of `|s − baseline|` on a monotone stretch.
    LogLinear,
    /// One-parameter least squares of `s(t) ≈ e^{−γt} M(t)` for a given shape `M`.
    CarrierModel,
}

/// Fitted exponential rate with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
    pub method: FitMethod,
}

const Z95: f64 = 1.959_963_984_540_054;

impl RateFit {
    fn new(rate: f64, std_err: f64, points: usize, method: FitMethod) -> Self {
        RateFit {
            rate,
            std_err,
            ci_low: rate - Z95 * std_err,
            ci_high: rate + Z95 * std_err,
            points,
            method,
        }
    }

    pub fn relative_error(&self, expected: f64) -> f64 {
        (self.rate - expected).abs() / expected.abs()
    }
}

fn check_lengths(times: &[f64], values: &[f64]) -> Result<(), ClosedFormError> {
    if times.len() != values.len() {
        return Err(ClosedFormError::InvalidInput(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    Ok(())
}

/// Ordinary least squares of `y` on `x`; returns `(slope, slope std err)`.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    let se = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, se)
}

/// Local maxima of `|s − baseline|` refined by a parabola through the three
/// samples around each, discarding peaks below `floor` times the largest.
pub fn envelope_peaks(times: &[f64], values: &[f64], baseline: f64, floor: f64) -> Vec<(f64, f64)> {
    let y: Vec<f64> = values.iter().map(|v| (v - baseline).abs()).collect();
    let top = y.iter().copied().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
        let denom = a - 2.0 * b + c;
        let (dt, t, v) = if denom < 0.0 {
            let d = 0.5 * (a - c) / denom;
            let step = 0.5 * (times[i + 1] - times[i - 1]);
            (d * step, times[i], b - 0.25 * (a - c) * d)
        } else {
            (0.0, times[i], b)
        };
        if v > floor * top {
            peaks.push((t + dt, v));
        }
    }
    peaks
}

/// Rate from the peaks of `|s − baseline|`; needs at least `min_peaks`.
pub fn peak_rate(times: &[f64], values: &[f64], baseline: f64, min_peaks: usize) -> Result<RateFit, ClosedFormError> {
    check_lengths(times, values)?;
    let peaks = envelope_peaks(times, values, baseline, 1e-8);
    if peaks.len() < min_peaks.max(2) {
        return Err(ClosedFormError::Fit(format!(
            "found {} peaks, need {}",
            peaks.len(),
            min_peaks.max(2)
        )));
    }
    let t: Vec<f64> = peaks.iter().map(|p| p.0).collect();
    let l: Vec<f64> = peaks.iter().map(|p| p.1.ln()).collect();
    let (slope, se) = ols(&t, &l);
    Ok(RateFit::new(-slope, se, peaks.len(), FitMethod::Peaks))
}

/// Rate from `ln|s − baseline|` on samples with `t ≥ t_from` whose
/// deviation exceeds `floor`.
pub fn log_linear_rate(
    times: &[f64],
    values: &[f64],
    baseline: f64,
    t_from: f64,
    floor: f64,
) -> Result<RateFit, ClosedFormError> {
    check_lengths(times, values)?;
    let (t, l): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= t_from && (**v - baseline).abs() > floor)
        .map(|(t, v)| (*t, (v - baseline).abs().ln()))
        .unzip();
    if t.len() < 3 {
        return Err(ClosedFormError::Fit(format!("only {} usable samples", t.len())));
    }
    let (slope, se) = ols(&t, &l);
    Ok(RateFit::new(-slope, se, t.len(), FitMethod::LogLinear))
}

/// Least-squares `γ` in `s(t) ≈ e^{−γt} M(t)`, searched on `[lo, hi]`.
pub fn carrier_model_rate(
    times: &[f64],
    values: &[f64],
    shape: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> Result<RateFit, ClosedFormError> {
    check_lengths(times, values)?;
    if !(lo < hi) || times.len() < 2 {
        return Err(ClosedFormError::Fit("empty search interval or too few samples".into()));
    }
    let m: Vec<f64> = times.iter().map(|&t| shape(t)).collect();
    let rss = |g: f64| -> f64 {
        times
            .iter()
            .zip(values.iter().zip(&m))
            .map(|(t, (v, mm))| (v - (-g * t).exp() * mm).powi(2))
            .sum()
    };
    // Golden-section search, then Gauss-Newton polish.
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (rss(c), rss(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = rss(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = rss(d);
        }
    }
    let mut g = 0.5 * (a + b);
    let mut jtj = 0.0;
    for _ in 0..5 {
        let (mut num, mut den) = (0.0, 0.0);
        for (t, (v, mm)) in times.iter().zip(values.iter().zip(&m)) {
            let model = (-g * t).exp() * mm;
            let dm = -t * model;
            num += dm * (v - model);
            den += dm * dm;
        }
        jtj = den;
        if den == 0.0 {
            break;
        }
        g += num / den;
    }
    let n = times.len() as f64;
    let se = if jtj > 0.0 { (rss(g) / (n - 1.0) / jtj).sqrt() } else { f64::INFINITY };
    Ok(RateFit::new(g, se, times.len(), FitMethod::CarrierModel))
}

/// Sign changes of `s − baseline`, ignoring samples within `floor` of it.
pub fn crossings(values: &[f64], baseline: f64, floor: f64) -> usize {
    let mut last = 0i8;
    let mut count = 0;
    for v in values {
        let d = v - baseline;
        if d.abs() <= floor {
            continue;
        }
        let s = if d > 0.0 { 1 } else { -1 };
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}
