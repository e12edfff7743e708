//! Initial motional states, the vibronic density matrix and partial traces.

use nalgebra::{DMatrix, Matrix2};

use super::HilbertError;
use crate::C64;

/// Internal ground state ↓ (block index 0).
pub const DOWN: usize = 0;
/// Internal excited state ↑ (block index 1).
pub const UP: usize = 1;

/// Default tail-occupation budget for the Fock truncation.
pub const DEFAULT_TRUNCATION_BUDGET: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Declarative initial state of the trap mode.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionalStateSpec {
    /// Number state `|n⟩`.
    Fock(usize),
    /// Coherent state `|α⟩` with Poisson occupation.
    Coherent(C64),
    /// Thermal state with mean occupation `nbar`.
    Thermal(f64),
    /// Explicit motional density matrix in the Fock basis.
    Explicit(DMatrix<C64>),
}

/// Motional density matrix after truncation and renormalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionalState {
    pub matrix: DMatrix<C64>,
    /// Factor applied to restore unit trace after truncation (1 when exact).
    pub renormalization: f64,
    /// Occupation discarded by the truncation, before renormalisation.
    pub discarded_mass: f64,
}

impl MotionalStateSpec {
    fn validate(&self) -> Result<(), HilbertError> {
        match self {
            MotionalStateSpec::Thermal(nbar) if !(*nbar >= 0.0 && nbar.is_finite()) => {
                Err(HilbertError::InvalidParameter {
                    name: "nbar",
                    value: *nbar,
                    reason: "thermal occupation must be finite and >= 0",
                })
            }
            MotionalStateSpec::Coherent(alpha) if !(alpha.re.is_finite() && alpha.im.is_finite()) => {
                Err(HilbertError::InvalidParameter {
                    name: "alpha",
                    value: alpha.norm(),
                    reason: "coherent amplitude must be finite",
                })
            }
            MotionalStateSpec::Explicit(m) => {
                if !m.is_square() || m.nrows() == 0 {
                    return Err(HilbertError::InvalidState(format!(
                        "explicit motional matrix must be square and non-empty, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                check_density(m, PSD_TOL)
            }
            _ => Ok(()),
        }
    }

    /// Mean and standard deviation of the initial phonon number.
    pub fn occupation_moments(&self) -> (f64, f64) {
        match self {
            MotionalStateSpec::Fock(n) => (*n as f64, 0.0),
            MotionalStateSpec::Coherent(a) => (a.norm_sqr(), a.norm()),
            MotionalStateSpec::Thermal(nbar) => (*nbar, (nbar * (nbar + 1.0)).sqrt()),
            MotionalStateSpec::Explicit(m) => {
                let mean: f64 = (0..m.nrows()).map(|n| n as f64 * m[(n, n)].re).sum();
                let second: f64 = (0..m.nrows()).map(|n| (n * n) as f64 * m[(n, n)].re).sum();
                (mean, (second - mean * mean).max(0.0).sqrt())
            }
        }
    }

    /// Untruncated occupation `p_n` for `n < len`, plus the exact remainder
    /// `Σ_{n ≥ len} p_n`.
    fn occupations(&self, len: usize) -> (Vec<f64>, f64) {
        match self {
            MotionalStateSpec::Fock(nbar) => {
                let p = (0..len).map(|n| if n == *nbar { 1.0 } else { 0.0 }).collect();
                (p, if *nbar >= len { 1.0 } else { 0.0 })
            }
            MotionalStateSpec::Coherent(alpha) => {
                let amps = coherent_amplitudes(*alpha, len);
                let p: Vec<f64> = amps.iter().map(|c| c.norm_sqr()).collect();
                (p, coherent_tail(*alpha, len))
            }
            MotionalStateSpec::Thermal(nbar) => {
                let q = nbar / (1.0 + nbar);
                let p = (0..len).map(|n| (1.0 - q) * q.powi(n as i32)).collect();
                (p, q.powi(len as i32))
            }
            MotionalStateSpec::Explicit(m) => {
                let diag: Vec<f64> = (0..m.nrows()).map(|n| m[(n, n)].re).collect();
                let p = (0..len).map(|n| diag.get(n).copied().unwrap_or(0.0)).collect();
                let tail = diag.iter().skip(len).sum::<f64>().max(0.0);
                (p, tail)
            }
        }
    }

    /// Mass at `n ≥ from` of the untruncated distribution.
    fn tail_from(&self, from: usize) -> f64 {
        self.occupations(from).1
    }
}

fn coherent_amplitudes(alpha: C64, len: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(len);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..len {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        out.push(c);
    }
    out
}

fn coherent_tail(alpha: C64, from: usize) -> f64 {
    let a2 = alpha.norm_sqr();
    // p_n = e^{-|α|²}|α|^{2n}/n!, accumulated in log space past the mode.
    let mut log_p = -a2;
    for n in 1..=from {
        log_p += a2.ln() - (n as f64).ln();
    }
    if a2 == 0.0 {
        return if from == 0 { 1.0 } else { 0.0 };
    }
    let mut tail = 0.0;
    let mut n = from;
    loop {
        let p = log_p.exp();
        tail += p;
        n += 1;
        log_p += a2.ln() - (n as f64).ln();
        if (n as f64) > a2 && p < 1e-18 * tail.max(1e-300) {
            break;
        }
        if n > from + 100_000 {
            break;
        }
    }
    tail
}

/// Smallest `dim >= start` whose occupation at `n >= dim - offset` fits `budget`.
fn required_dim(spec: &MotionalStateSpec, budget: f64, start: usize, offset: usize) -> usize {
    let mut dim = start.max(offset + 2);
    while spec.tail_from(dim - offset) > budget {
        dim += 1;
        if dim > 1 << 20 {
            break;
        }
    }
    dim
}

/// Default Fock dimension `N_max + 1` for an initial state driven on sideband `k`:
/// `N_max = max(32, n̄ + 8σ + k + 8)`, grown further until the occupation at
/// `n ≥ N_max − k` fits the truncation budget.
pub fn default_dim_fock(spec: &MotionalStateSpec, k: usize, budget: f64) -> usize {
    let (mean, sd) = spec.occupation_moments();
    let n_max = 32usize.max((mean + 8.0 * sd).ceil() as usize + k + 8);
    // Vibronic tail convention: occupation at n >= N_max - k, N_max = dim - 1.
    let dim = required_dim(spec, budget, n_max + 1, k + 1);
    match spec {
        MotionalStateSpec::Explicit(m) => dim.max(m.nrows()),
        _ => dim,
    }
}

/// Motional density matrix for `spec` on `dim_fock` levels with the default
/// truncation budget.
pub fn initial_state(spec: &MotionalStateSpec, dim_fock: usize) -> Result<MotionalState, HilbertError> {
    initial_state_with_budget(spec, dim_fock, DEFAULT_TRUNCATION_BUDGET)
}

/// As [`initial_state`], with an explicit tail budget. The discarded mass
/// `Σ_{n ≥ dim_fock} p_n` must stay below `budget`; the matrix is then
/// renormalised to unit trace.
pub fn initial_state_with_budget(
    spec: &MotionalStateSpec,
    dim_fock: usize,
    budget: f64,
) -> Result<MotionalState, HilbertError> {
    if dim_fock < 2 {
        return Err(HilbertError::InvalidDimension {
            dim: dim_fock,
            reason: "need at least two Fock levels",
        });
    }
    spec.validate()?;
    let (_, tail) = spec.occupations(dim_fock);
    if tail > budget {
        return Err(HilbertError::Truncation {
            dim: dim_fock,
            tail,
            budget,
            required: required_dim(spec, budget, dim_fock, 0),
        });
    }
    let mut matrix = match spec {
        MotionalStateSpec::Fock(n) => {
            let mut m = DMatrix::zeros(dim_fock, dim_fock);
            m[(*n, *n)] = C64::new(1.0, 0.0);
            m
        }
        MotionalStateSpec::Coherent(alpha) => {
            let c = coherent_amplitudes(*alpha, dim_fock);
            DMatrix::from_fn(dim_fock, dim_fock, |i, j| c[i] * c[j].conj())
        }
        MotionalStateSpec::Thermal(_) => {
            let (p, _) = spec.occupations(dim_fock);
            DMatrix::from_fn(dim_fock, dim_fock, |i, j| {
                if i == j {
                    C64::new(p[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        }
        MotionalStateSpec::Explicit(m) => {
            let n = m.nrows();
            DMatrix::from_fn(dim_fock, dim_fock, |i, j| {
                if i < n && j < n {
                    m[(i, j)]
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        }
    };
    let trace: f64 = (0..dim_fock).map(|i| matrix[(i, i)].re).sum();
    let renormalization = 1.0 / trace;
    matrix *= C64::new(renormalization, 0.0);
    Ok(MotionalState {
        matrix,
        renormalization,
        discarded_mass: tail,
    })
}

fn check_density(m: &DMatrix<C64>, psd_tol: f64) -> Result<(), HilbertError> {
    let herm = hermiticity_defect(m);
    if herm > HERMITIAN_TOL {
        return Err(HilbertError::InvalidState(format!(
            "not Hermitian: max |ρ - ρ†| = {herm:.3e}"
        )));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL.max(1e-10) || tr.im.abs() > TRACE_TOL.max(1e-10) {
        return Err(HilbertError::InvalidState(format!("trace {tr} != 1")));
    }
    let min_eig = min_eigenvalue(m);
    if min_eig < -psd_tol {
        return Err(HilbertError::InvalidState(format!(
            "not positive semidefinite: min eigenvalue {min_eig:.3e}"
        )));
    }
    Ok(())
}

pub(crate) fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm_sqr());
        }
    }
    worst.sqrt()
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub(crate) fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Full vibronic density matrix on `{↓, ↑} ⊗ Fock(dim_fock)`.
///
/// Entry `(S·dim_fock + n, S'·dim_fock + m)` holds `ρ_{Sn,S'm}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VibronicDensityMatrix {
    dim_fock: usize,
    entries: DMatrix<C64>,
}

impl VibronicDensityMatrix {
    /// Validated constructor: Hermitian and unit trace to 1e-12.
    pub fn new(dim_fock: usize, entries: DMatrix<C64>) -> Result<Self, HilbertError> {
        if entries.nrows() != 2 * dim_fock || entries.ncols() != 2 * dim_fock {
            return Err(HilbertError::DimensionMismatch {
                expected: 2 * dim_fock,
                found: entries.nrows(),
            });
        }
        let herm = hermiticity_defect(&entries);
        if herm > HERMITIAN_TOL {
            return Err(HilbertError::InvalidState(format!(
                "not Hermitian: max |ρ - ρ†| = {herm:.3e}"
            )));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(HilbertError::InvalidState(format!("trace {tr} != 1")));
        }
        Ok(VibronicDensityMatrix { dim_fock, entries })
    }

    /// Wraps a matrix without validation; used for integrator output, whose
    /// defects are monitored rather than rejected.
    pub fn from_entries_unchecked(dim_fock: usize, entries: DMatrix<C64>) -> Self {
        debug_assert_eq!(entries.nrows(), 2 * dim_fock);
        VibronicDensityMatrix { dim_fock, entries }
    }

    /// Maximally mixed state `I / (2·dim_fock)`.
    pub fn maximally_mixed(dim_fock: usize) -> Self {
        let n = 2 * dim_fock;
        let entries = DMatrix::from_diagonal_element(n, n, C64::new(1.0 / n as f64, 0.0));
        VibronicDensityMatrix { dim_fock, entries }
    }

    pub fn dim_fock(&self) -> usize {
        self.dim_fock
    }

    /// `N_max = dim_fock − 1`.
    pub fn n_max(&self) -> usize {
        self.dim_fock - 1
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    #[inline]
    pub fn index(&self, s: usize, n: usize) -> usize {
        s * self.dim_fock + n
    }

    /// `ρ_{Sn,S'm}`.
    pub fn element(&self, s: usize, n: usize, s2: usize, m: usize) -> C64 {
        self.entries[(self.index(s, n), self.index(s2, m))]
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ.
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.entries)
    }
}

/// Occupation at `n ≥ N_max − k`, summed over both internal levels.
pub fn tail_mass(rho: &VibronicDensityMatrix, k: usize) -> f64 {
    let d = rho.dim_fock();
    let from = (d - 1).saturating_sub(k);
    (from..d)
        .map(|n| rho.element(DOWN, n, DOWN, n).re + rho.element(UP, n, UP, n).re)
        .sum()
}

/// Uncorrelated initial state with only ↓ populated:
/// `ρ_{Sn,S'm}(0) = δ_{SS'} δ_{S↓} ρ^cm_{nm}(0)`.
pub fn compose_initial(motional: &DMatrix<C64>, dim_fock: usize) -> Result<VibronicDensityMatrix, HilbertError> {
    if motional.nrows() != dim_fock || motional.ncols() != dim_fock {
        return Err(HilbertError::DimensionMismatch {
            expected: dim_fock,
            found: motional.nrows(),
        });
    }
    let mut entries = DMatrix::zeros(2 * dim_fock, 2 * dim_fock);
    entries.view_mut((0, 0), (dim_fock, dim_fock)).copy_from(motional);
    VibronicDensityMatrix::new(dim_fock, entries)
}

/// Internal reduced state `σ_{SS'} = Σ_n ρ_{Sn,S'n}`; `σ_{↓↓}` is P↓.
pub fn reduce_internal(rho: &VibronicDensityMatrix) -> Matrix2<C64> {
    let d = rho.dim_fock();
    let mut sigma = Matrix2::zeros();
    for s in 0..2 {
        for s2 in 0..2 {
            sigma[(s, s2)] = (0..d).map(|n| rho.element(s, n, s2, n)).sum();
        }
    }
    sigma
}

/// Motional reduced state `ρ^cm_{nm} = Σ_S ρ_{Sn,Sm}`.
pub fn reduce_motional(rho: &VibronicDensityMatrix) -> DMatrix<C64> {
    let d = rho.dim_fock();
    let e = rho.entries();
    e.view((0, 0), (d, d)) + e.view((d, d), (d, d))
}
