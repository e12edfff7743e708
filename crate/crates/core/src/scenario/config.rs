//! Flat `key = value` scenario files with explicit units.
//!
//! Physical values take an arithmetic expression followed by a unit token,
//! e.g. `omega = 2pi*11.2e6 rad/s` or `kappa = 0.05 kappa_crit`. Unknown or
//! repeated keys are errors.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::expr;
use super::ScenarioError;
use crate::dynamics::{channels as ch, uniform_grid, DynamicsMode, IntegratorConfig, IntegratorMethod};
use crate::hilbert::{default_dim_fock, rabi_frequency, HilbertError, MotionalStateSpec, TrapParams};
use crate::C64;

/// Every accepted key, in canonical order.
pub const KEYS: &[&str] = &[
    "name",
    "omega",
    "omega21",
    "omega0",
    "eta",
    "phi",
    "k",
    "kappa",
    "crit_manifold",
    "initial",
    "fock_n",
    "alpha",
    "alpha_phase",
    "nbar",
    "populations",
    "dim_fock",
    "truncation_budget",
    "mode",
    "sideband_cutoff",
    "method",
    "rel_tol",
    "abs_tol",
    "max_step",
    "eigen_stride",
    "t_end",
    "samples",
    "channels",
    "emit",
    "tol_p_down",
    "tol_mean_position",
    "tol_mean_energy",
    "tol_energy_drift",
    "max_p_down_crossings",
    "min_p_down_crossings",
    "expect_p_down_monotone",
];

const REQUIRED: &[&str] = &["omega", "omega0", "eta", "k", "kappa", "initial"];

pub const DEFAULT_SAMPLES: usize = 2000;

/// A configuration problem, located by line and field where possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
    /// Nearest known key, for unknown keys.
    pub suggestion: Option<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if let Some(name) = &self.field {
            write!(f, "`{name}`: ")?;
        }
        write!(f, "{}", self.message)?;
        if let Some(s) = &self.suggestion {
            write!(f, " (did you mean `{s}`?)")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Initial motional state as written in the file.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Fock(usize),
    Coherent { alpha: f64, phase: f64 },
    Thermal(f64),
    /// Diagonal occupations, summing to 1.
    Populations(Vec<f64>),
}

impl InitialSpec {
    pub fn motional_spec(&self) -> MotionalStateSpec {
        match self {
            InitialSpec::Fock(n) => MotionalStateSpec::Fock(*n),
            InitialSpec::Coherent { alpha, phase } => MotionalStateSpec::Coherent(C64::from_polar(*alpha, *phase)),
            InitialSpec::Thermal(nbar) => MotionalStateSpec::Thermal(*nbar),
            InitialSpec::Populations(p) => {
                let n = p.len();
                MotionalStateSpec::Explicit(DMatrix::from_fn(n, n, |i, j| {
                    C64::new(if i == j { p[i] } else { 0.0 }, 0.0)
                }))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emit {
    pub csv: bool,
    pub json: bool,
}

/// Maximum absolute deviation allowed between numeric and closed-form channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub p_down: f64,
    pub mean_position: f64,
    pub mean_energy: f64,
}

/// Optional verdicts on the numeric run alone.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Checks {
    pub energy_drift: Option<f64>,
    pub max_p_down_crossings: Option<usize>,
    pub min_p_down_crossings: Option<usize>,
    pub expect_p_down_monotone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub trap: TrapParams,
    pub initial: InitialSpec,
    /// Manifold whose Rabi frequency sets the `kappa_crit` and Rabi time units.
    pub crit_manifold: usize,
    pub dim_fock: usize,
    pub truncation_budget: f64,
    pub mode: DynamicsMode,
    pub integrator: IntegratorConfig,
    /// The time grid was derived from the trap, so sweeps re-derive it per κ.
    pub t_end_auto: bool,
    pub outputs: Vec<String>,
    pub emit: Emit,
    pub tolerances: Tolerances,
    pub checks: Checks,
}

impl ScenarioConfig {
    pub fn t_end(&self) -> f64 {
        *self.integrator.sample_times.last().expect("validated grid")
    }

    pub fn samples(&self) -> usize {
        self.integrator.sample_times.len()
    }

    /// `|Ω_{c,c+k}|` for the reference manifold `c`.
    pub fn reference_rabi(&self) -> Result<f64, HilbertError> {
        Ok(rabi_frequency(self.crit_manifold, &self.trap)?.abs())
    }

    /// `max(10 Rabi periods, 40/κ)` for the current trap.
    pub fn auto_t_end(&self) -> Result<f64, HilbertError> {
        auto_t_end(&self.trap, self.crit_manifold)
    }

    /// Fully resolved file text: SI units, every default spelled out.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        let f = |v: f64| format!("{v:.16e}");
        let p = &self.trap;
        put("name", self.name.clone());
        put("omega", format!("{} rad/s", f(p.omega)));
        put("omega21", format!("{} rad/s", f(p.omega21)));
        put("omega0", format!("{} rad/s", f(p.omega0)));
        put("eta", f(p.eta));
        put("phi", format!("{} rad", f(p.phi)));
        put("k", p.k_sideband.to_string());
        put("kappa", format!("{} 1/s", f(p.kappa)));
        put("crit_manifold", self.crit_manifold.to_string());
        match &self.initial {
            InitialSpec::Fock(n) => {
                put("initial", "fock".into());
                put("fock_n", n.to_string());
            }
            InitialSpec::Coherent { alpha, phase } => {
                put("initial", "coherent".into());
                put("alpha", f(*alpha));
                put("alpha_phase", format!("{} rad", f(*phase)));
            }
            InitialSpec::Thermal(nbar) => {
                put("initial", "thermal".into());
                put("nbar", f(*nbar));
            }
            InitialSpec::Populations(v) => {
                put("initial", "populations".into());
                put("populations", v.iter().map(|x| f(*x)).collect::<Vec<_>>().join(", "));
            }
        }
        put("dim_fock", self.dim_fock.to_string());
        put("truncation_budget", f(self.truncation_budget));
        match self.mode {
            DynamicsMode::ReducedJcm => put("mode", "jcm".into()),
            DynamicsMode::FullCoupling { sideband_cutoff } => {
                put("mode", "full".into());
                put("sideband_cutoff", sideband_cutoff.to_string());
            }
        }
        let ic = &self.integrator;
        put(
            "method",
            match ic.method {
                IntegratorMethod::Dopri5 => "dopri5",
                IntegratorMethod::Rk4 => "rk4",
            }
            .into(),
        );
        put("rel_tol", f(ic.rel_tol));
        put("abs_tol", f(ic.abs_tol));
        if let Some(h) = ic.max_step {
            put("max_step", format!("{} s", f(h)));
        }
        put("eigen_stride", ic.eigen_stride.to_string());
        put("t_end", format!("{} s", f(self.t_end())));
        put("samples", self.samples().to_string());
        put("channels", self.outputs.join(", "));
        let mut emit = Vec::new();
        if self.emit.csv {
            emit.push("csv");
        }
        if self.emit.json {
            emit.push("json");
        }
        put("emit", emit.join(", "));
        put("tol_p_down", f(self.tolerances.p_down));
        put("tol_mean_position", f(self.tolerances.mean_position));
        put("tol_mean_energy", f(self.tolerances.mean_energy));
        let c = &self.checks;
        if let Some(v) = c.energy_drift {
            put("tol_energy_drift", f(v));
        }
        if let Some(v) = c.max_p_down_crossings {
            put("max_p_down_crossings", v.to_string());
        }
        if let Some(v) = c.min_p_down_crossings {
            put("min_p_down_crossings", v.to_string());
        }
        put("expect_p_down_monotone", c.expect_p_down_monotone.to_string());
        out
    }

    /// SHA-256 of [`Self::canonical_text`], lowercase hex.
    pub fn hash(&self) -> String {
        hash_text(&self.canonical_text())
    }
}

pub fn hash_text(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn auto_t_end(trap: &TrapParams, manifold: usize) -> Result<f64, HilbertError> {
    let rabi = rabi_frequency(manifold, trap)?.abs();
    let periods = if rabi > 0.0 { 10.0 * 2.0 * PI / rabi } else { 0.0 };
    let damping = if trap.kappa > 0.0 { 40.0 / trap.kappa } else { 0.0 };
    let t = periods.max(damping);
    if !(t > 0.0 && t.is_finite()) {
        return Err(HilbertError::InvalidRange(format!(
            "no time scale: Omega_{{{manifold},{manifold}+k}} and kappa both vanish; set t_end explicitly"
        )));
    }
    Ok(t)
}

struct Entry {
    value: String,
    line: usize,
}

struct Fields {
    map: BTreeMap<&'static str, Entry>,
}

fn err(line: Option<usize>, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        field: Some(field.to_string()),
        message: message.into(),
        suggestion: None,
    }
}

/// Closest candidate by edit distance, if reasonably close.
pub(crate) fn nearest<'a>(word: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<String> {
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(word, c), c))
        .min()
        .filter(|(d, c)| *d <= 3.max(c.len() / 3))
        .map(|(_, c)| c.to_string())
}

fn lex_lines(text: &str) -> Result<Fields, ConfigError> {
    let mut map: BTreeMap<&'static str, Entry> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError {
                line: Some(line),
                field: None,
                message: format!("expected `key = value`, got `{body}`"),
                suggestion: None,
            });
        };
        let (k, v) = (k.trim(), v.trim());
        let Some(key) = KEYS.iter().copied().find(|x| *x == k) else {
            return Err(ConfigError {
                line: Some(line),
                field: Some(k.to_string()),
                message: "unknown key".into(),
                suggestion: nearest(k, KEYS.iter().copied()),
            });
        };
        if v.is_empty() {
            return Err(err(Some(line), key, "empty value"));
        }
        if let Some(prev) = map.get(key) {
            return Err(err(Some(line), key, format!("duplicate key, first set on line {}", prev.line)));
        }
        map.insert(
            key,
            Entry {
                value: v.to_string(),
                line,
            },
        );
    }
    for r in REQUIRED {
        if !map.contains_key(r) {
            return Err(err(None, r, "required field missing"));
        }
    }
    Ok(Fields { map })
}

enum Dim {
    Frequency,
    Angle,
    Rate,
    Time,
}

/// Scales that depend on already-parsed fields.
#[derive(Default)]
struct UnitContext {
    omega: Option<f64>,
    omega0: Option<f64>,
    kappa: Option<f64>,
    rabi: Option<f64>,
}

impl UnitContext {
    fn scale(&self, dim: &Dim, unit: &str) -> Result<f64, String> {
        let need = |v: Option<f64>, what: &str| v.ok_or_else(|| format!("unit `{unit}` needs {what}"));
        let nonzero = |v: f64, what: &str| {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(format!("unit `{unit}` needs nonzero {what}"))
            }
        };
        let two_pi = 2.0 * PI;
        let s = match (dim, unit) {
            (Dim::Frequency, "rad/s") => 1.0,
            (Dim::Frequency, "Hz") => two_pi,
            (Dim::Frequency, "kHz") => two_pi * 1e3,
            (Dim::Frequency, "MHz") => two_pi * 1e6,
            (Dim::Frequency, "omega") => need(self.omega, "`omega`")?,
            (Dim::Angle, "rad") => 1.0,
            (Dim::Angle, "deg") => PI / 180.0,
            (Dim::Rate, "1/s") | (Dim::Rate, "s^-1") => 1.0,
            (Dim::Rate, "kappa_crit") => 4.0 * need(self.rabi, "the reference Rabi frequency")?,
            (Dim::Rate, "omega0") => need(self.omega0, "`omega0`")?,
            (Dim::Time, "s") => 1.0,
            (Dim::Time, "ms") => 1e-3,
            (Dim::Time, "us") => 1e-6,
            (Dim::Time, "ns") => 1e-9,
            (Dim::Time, "inv_omega0") => 1.0 / nonzero(need(self.omega0, "`omega0`")?, "omega0")?,
            (Dim::Time, "inv_kappa") => 1.0 / nonzero(need(self.kappa, "`kappa`")?, "kappa")?,
            (Dim::Time, "inv_rabi") => 1.0 / nonzero(need(self.rabi, "the Rabi frequency")?, "Rabi frequency")?,
            (Dim::Time, "rabi_periods") => {
                two_pi / nonzero(need(self.rabi, "the Rabi frequency")?, "Rabi frequency")?
            }
            _ => {
                let allowed = match dim {
                    Dim::Frequency => "rad/s, Hz, kHz, MHz, omega",
                    Dim::Angle => "rad, deg",
                    Dim::Rate => "1/s, s^-1, kappa_crit, omega0",
                    Dim::Time => "s, ms, us, ns, inv_omega0, inv_kappa, inv_rabi, rabi_periods",
                };
                return Err(format!("unit `{unit}` not allowed here; expected one of {allowed}"));
            }
        };
        Ok(s)
    }
}

impl Fields {
    fn entry(&self, key: &str) -> Option<&Entry> {
        self.map.get(key)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entry(key).map(|e| e.line)
    }

    fn fail(&self, key: &str, message: impl Into<String>) -> ConfigError {
        err(self.line(key), key, message)
    }

    fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let Some(e) = self.entry(key) else { return Ok(None) };
        expr::eval(&e.value).map(Some).map_err(|m| err(Some(e.line), key, m))
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.number_or(key, default)?;
        if !(v > 0.0) {
            return Err(self.fail(key, format!("must be > 0, got {v}")));
        }
        Ok(v)
    }

    fn integer(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        let Some(v) = self.number(key)? else { return Ok(None) };
        if v < 0.0 || v.fract() != 0.0 || v > 1e9 {
            return Err(self.fail(key, format!("expected a non-negative integer, got {v}")));
        }
        Ok(Some(v as usize))
    }

    fn quantity(&self, key: &str, dim: Dim, ctx: &UnitContext) -> Result<Option<f64>, ConfigError> {
        let Some(e) = self.entry(key) else { return Ok(None) };
        let Some((body, unit)) = e.value.rsplit_once(char::is_whitespace) else {
            return Err(err(Some(e.line), key, format!("missing unit in `{}`", e.value)));
        };
        let scale = ctx.scale(&dim, unit.trim()).map_err(|m| err(Some(e.line), key, m))?;
        let v = expr::eval(body).map_err(|m| err(Some(e.line), key, m))?;
        Ok(Some(v * scale))
    }

    fn word<'a>(&self, key: &str, allowed: &[&'a str], default: &'a str) -> Result<&'a str, ConfigError> {
        let Some(e) = self.entry(key) else { return Ok(default) };
        allowed.iter().copied().find(|a| *a == e.value).ok_or_else(|| ConfigError {
            suggestion: nearest(&e.value, allowed.iter().copied()),
            ..err(Some(e.line), key, format!("`{}` is not one of {}", e.value, allowed.join(", ")))
        })
    }

    fn list(&self, key: &str) -> Option<Vec<String>> {
        self.entry(key)
            .map(|e| e.value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }

    fn boolean(&self, key: &str) -> Result<bool, ConfigError> {
        Ok(self.word(key, &["true", "false"], "false")? == "true")
    }

    /// Rejects keys that only make sense in another context.
    fn forbid(&self, keys: &[&str], reason: &str) -> Result<(), ConfigError> {
        for k in keys {
            if self.entry(k).is_some() {
                return Err(self.fail(k, format!("not used {reason}")));
            }
        }
        Ok(())
    }
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    Ok(parse_str_named(&text, stem)?)
}

/// Parses file text; a missing `name` defaults to `scenario`.
pub fn parse_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_str_named(text, "scenario")
}

fn parse_str_named(text: &str, default_name: &str) -> Result<ScenarioConfig, ConfigError> {
    let f = lex_lines(text)?;

    let name = f.entry("name").map(|e| e.value.clone()).unwrap_or_else(|| default_name.to_string());
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
        return Err(f.fail("name", format!("`{name}` must be non-empty [A-Za-z0-9._-]")));
    }

    let mut ctx = UnitContext::default();
    let omega = f.quantity("omega", Dim::Frequency, &ctx)?.expect("required");
    ctx.omega = Some(omega);
    let omega21 = f.quantity("omega21", Dim::Frequency, &ctx)?.unwrap_or(0.0);
    let omega0 = f.quantity("omega0", Dim::Frequency, &ctx)?.expect("required");
    ctx.omega0 = Some(omega0);
    let eta = f.number("eta")?.expect("required");
    let phi = f.quantity("phi", Dim::Angle, &ctx)?.unwrap_or(-PI / 2.0);
    let k = f.integer("k")?.expect("required");
    let mut trap = TrapParams {
        omega,
        omega21,
        omega0,
        eta,
        phi,
        k_sideband: k,
        kappa: 0.0,
    };
    let check_trap = |trap: &TrapParams| -> Result<(), ConfigError> {
        match trap.validate() {
            Err(HilbertError::InvalidParameter { name, value, reason }) => {
                Err(f.fail(name, format!("{value} {reason}")))
            }
            Err(e) => Err(ConfigError {
                line: None,
                field: None,
                message: e.to_string(),
                suggestion: None,
            }),
            Ok(()) => Ok(()),
        }
    };
    check_trap(&trap)?;

    let kind = f.word("initial", &["fock", "coherent", "thermal", "populations"], "fock")?;
    let state_keys = ["fock_n", "alpha", "alpha_phase", "nbar", "populations"];
    let own: &[&str] = match kind {
        "fock" => &["fock_n"],
        "coherent" => &["alpha", "alpha_phase"],
        "thermal" => &["nbar"],
        _ => &["populations"],
    };
    let others: Vec<&str> = state_keys.iter().copied().filter(|s| !own.contains(s)).collect();
    f.forbid(&others, &format!("with initial = {kind}"))?;
    let require = |key: &str| -> Result<(), ConfigError> {
        if f.entry(key).is_none() {
            return Err(err(f.line("initial"), key, format!("required with initial = {kind}")));
        }
        Ok(())
    };
    let initial = match kind {
        "fock" => InitialSpec::Fock(f.integer("fock_n")?.unwrap_or(0)),
        "coherent" => {
            require("alpha")?;
            let alpha = f.number("alpha")?.expect("checked");
            if alpha < 0.0 {
                return Err(f.fail("alpha", "magnitude must be >= 0; use alpha_phase for the sign"));
            }
            let phase = f.quantity("alpha_phase", Dim::Angle, &ctx)?.unwrap_or(0.0);
            InitialSpec::Coherent { alpha, phase }
        }
        "thermal" => {
            require("nbar")?;
            let nbar = f.number("nbar")?.expect("checked");
            if nbar < 0.0 {
                return Err(f.fail("nbar", format!("must be >= 0, got {nbar}")));
            }
            InitialSpec::Thermal(nbar)
        }
        _ => {
            require("populations")?;
            let e = f.entry("populations").expect("checked");
            let mut p = Vec::new();
            for item in e.value.split(',') {
                let v = expr::eval(item.trim()).map_err(|m| err(Some(e.line), "populations", m))?;
                if v < 0.0 {
                    return Err(err(Some(e.line), "populations", format!("negative occupation {v}")));
                }
                p.push(v);
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-10 || p.len() < 2 {
                return Err(err(
                    Some(e.line),
                    "populations",
                    format!("need at least two occupations summing to 1, got {} summing to {sum}", p.len()),
                ));
            }
            InitialSpec::Populations(p)
        }
    };
    let spec = initial.motional_spec();

    let (mean, _) = spec.occupation_moments();
    let crit_manifold = f.integer("crit_manifold")?.unwrap_or(mean.floor() as usize);
    let rabi = rabi_frequency(crit_manifold, &trap)
        .map_err(|e| f.fail("crit_manifold", e.to_string()))?
        .abs();
    ctx.rabi = Some(rabi);
    trap.kappa = f.quantity("kappa", Dim::Rate, &ctx)?.expect("required");
    check_trap(&trap)?;
    ctx.kappa = Some(trap.kappa);

    let truncation_budget = f.positive("truncation_budget", crate::hilbert::DEFAULT_TRUNCATION_BUDGET)?;
    let dim_fock = match f.entry("dim_fock") {
        Some(e) if e.value == "auto" => default_dim_fock(&spec, k, truncation_budget),
        Some(_) => {
            let d = f.integer("dim_fock")?.expect("present");
            if d < k + 2 {
                return Err(f.fail("dim_fock", format!("need at least k + 2 = {} levels, got {d}", k + 2)));
            }
            d
        }
        None => default_dim_fock(&spec, k, truncation_budget),
    };

    let mode = match f.word("mode", &["jcm", "full"], "jcm")? {
        "jcm" => {
            f.forbid(&["sideband_cutoff"], "with mode = jcm")?;
            DynamicsMode::ReducedJcm
        }
        _ => {
            let cutoff = f.integer("sideband_cutoff")?.unwrap_or(k + 4);
            if cutoff < k {
                return Err(f.fail("sideband_cutoff", format!("must be >= k = {k}, got {cutoff}")));
            }
            DynamicsMode::FullCoupling {
                sideband_cutoff: cutoff,
            }
        }
    };

    let mut integrator = IntegratorConfig::default();
    integrator.method = match f.word("method", &["dopri5", "rk4"], "dopri5")? {
        "rk4" => IntegratorMethod::Rk4,
        _ => IntegratorMethod::Dopri5,
    };
    integrator.rel_tol = f.positive("rel_tol", integrator.rel_tol)?;
    integrator.abs_tol = f.positive("abs_tol", integrator.abs_tol)?;
    integrator.truncation_budget = Some(truncation_budget);
    integrator.eigen_stride = f.integer("eigen_stride")?.unwrap_or(integrator.eigen_stride);
    integrator.max_step = f.quantity("max_step", Dim::Time, &ctx)?;
    if let Some(h) = integrator.max_step {
        if !(h > 0.0) {
            return Err(f.fail("max_step", format!("must be > 0, got {h} s")));
        }
    }
    if integrator.method == IntegratorMethod::Rk4 && integrator.max_step.is_none() {
        return Err(err(f.line("method"), "max_step", "required with method = rk4"));
    }

    let (t_end, t_end_auto) = match f.entry("t_end") {
        Some(e) if e.value != "auto" => (f.quantity("t_end", Dim::Time, &ctx)?.expect("present"), false),
        _ => (auto_t_end(&trap, crit_manifold).map_err(|e| err(f.line("t_end"), "t_end", e.to_string()))?, true),
    };
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(f.fail("t_end", format!("must be > 0, got {t_end} s")));
    }
    let samples = f.integer("samples")?.unwrap_or(DEFAULT_SAMPLES);
    if samples < 2 {
        return Err(f.fail("samples", "need at least 2"));
    }
    integrator.sample_times = uniform_grid(t_end, samples);

    let outputs = match f.list("channels") {
        None => ch::STANDARD.iter().map(|(n, _)| n.to_string()).collect(),
        Some(v) if v.len() == 1 && v[0] == "all" => ch::STANDARD.iter().map(|(n, _)| n.to_string()).collect(),
        Some(v) => {
            let names = || ch::STANDARD.iter().map(|(n, _)| *n);
            for (i, c) in v.iter().enumerate() {
                if !names().any(|n| n == c) {
                    return Err(ConfigError {
                        suggestion: nearest(c, names()),
                        ..f.fail("channels", format!("unknown channel `{c}`"))
                    });
                }
                if v[..i].contains(c) {
                    return Err(f.fail("channels", format!("channel `{c}` listed twice")));
                }
            }
            if v.is_empty() {
                return Err(f.fail("channels", "empty list"));
            }
            v
        }
    };

    let emit = match f.list("emit") {
        None => Emit { csv: true, json: true },
        Some(v) => {
            let mut e = Emit { csv: false, json: false };
            for item in &v {
                match item.as_str() {
                    "csv" => e.csv = true,
                    "json" => e.json = true,
                    other => return Err(f.fail("emit", format!("`{other}` is not csv or json"))),
                }
            }
            e
        }
    };

    let tolerances = Tolerances {
        p_down: f.positive("tol_p_down", 1e-6)?,
        mean_position: f.positive("tol_mean_position", 1e-5)?,
        mean_energy: f.positive("tol_mean_energy", 1e-6)?,
    };
    let checks = Checks {
        energy_drift: match f.number("tol_energy_drift")? {
            Some(_) => Some(f.positive("tol_energy_drift", 0.0)?),
            None => None,
        },
        max_p_down_crossings: f.integer("max_p_down_crossings")?,
        min_p_down_crossings: f.integer("min_p_down_crossings")?,
        expect_p_down_monotone: f.boolean("expect_p_down_monotone")?,
    };

    Ok(ScenarioConfig {
        name,
        trap,
        initial,
        crit_manifold,
        dim_fock,
        truncation_budget,
        mode,
        integrator,
        t_end_auto,
        outputs,
        emit,
        tolerances,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# smallest useful file
omega = 2pi*11.2e6 rad/s
omega0 = 0.01 omega
eta = 0.2
k = 1
kappa = 0 1/s
initial = fock
";

    #[test]
    fn minimal_file_gets_defaults() {
        let c = parse_str(MINIMAL).unwrap();
        assert_eq!(c.name, "scenario");
        assert_eq!(c.initial, InitialSpec::Fock(0));
        assert_eq!(c.trap.omega21, 0.0);
        assert_eq!(c.trap.phi, -PI / 2.0);
        assert_eq!(c.mode, DynamicsMode::ReducedJcm);
        assert_eq!(c.samples(), DEFAULT_SAMPLES);
        assert!(c.t_end_auto);
        assert_eq!(c.outputs.len(), ch::STANDARD.len());
        assert_eq!(c.tolerances.p_down, 1e-6);
        let rabi = c.reference_rabi().unwrap();
        assert!((c.t_end() - 20.0 * PI / rabi).abs() < 1e-12 * c.t_end());
        let text = c.canonical_text();
        assert!(text.contains("expect_p_down_monotone = false"), "{text}");
    }

    #[test]
    fn canonical_text_is_a_fixed_point() {
        let src = format!("{MINIMAL}\nname = demo\nphi = -45 deg\n");
        let c = parse_str(&src).unwrap();
        let again = parse_str(&c.canonical_text()).unwrap();
        assert_eq!(again.canonical_text(), c.canonical_text());
        assert_eq!(again.hash(), c.hash());
        assert_eq!(again.trap, c.trap);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn negative_kappa_names_kappa() {
        let e = parse_str(&MINIMAL.replace("kappa = 0 1/s", "kappa = -1 1/s")).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("kappa"));
        assert_eq!(e.line, Some(6));
        assert!(e.to_string().contains("kappa"));
    }

    #[test]
    fn unknown_key_suggests_nearest() {
        let e = parse_str(&format!("{MINIMAL}kapa = 3 1/s\n")).unwrap_err();
        assert_eq!(e.suggestion.as_deref(), Some("kappa"));
        assert_eq!(e.line, Some(8));
        assert!(e.to_string().contains("did you mean `kappa`"));
    }

    #[test]
    fn unit_problems_are_reported() {
        let e = parse_str(&MINIMAL.replace("kappa = 0 1/s", "kappa = 3 Hz")).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("kappa"));
        let e = parse_str(&MINIMAL.replace("omega0 = 0.01 omega", "omega0 = 0.01")).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("omega0"));
        let e = parse_str(&format!("{MINIMAL}t_end = 5 inv_kappa\n")).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("t_end"));
    }

    #[test]
    fn duplicates_and_stray_state_keys_rejected() {
        let e = parse_str(&format!("{MINIMAL}eta = 0.1\n")).unwrap_err();
        assert!(e.message.contains("duplicate"));
        let e = parse_str(&format!("{MINIMAL}nbar = 0.5\n")).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("nbar"));
        let e = parse_str(&MINIMAL.replace("eta = 0.2\n", "")).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("eta"));
    }

    #[test]
    fn relative_units_resolve() {
        let src = MINIMAL.replace("kappa = 0 1/s", "kappa = 0.5 kappa_crit") + "t_end = 3 inv_kappa\n";
        let c = parse_str(&src).unwrap();
        let rabi = c.reference_rabi().unwrap();
        assert!((c.trap.kappa - 2.0 * rabi).abs() < 1e-9 * rabi);
        assert!((c.t_end() - 3.0 / c.trap.kappa).abs() < 1e-15);
    }
}
