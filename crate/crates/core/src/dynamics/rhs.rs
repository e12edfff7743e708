//! Right-hand sides of the measured master equation
//! `dρ/dt = −i[H, ρ] − (κ/2)[A, [A, ρ]]` with `A = σ₋σ₊ = |↓⟩⟨↓|`.
//!
//! Two frames are used. In the *motional lab frame* only the ↓↑ coherences
//! are rotated by the laser phase (`ρ̃_{↓n,↑m} = ρ_{↓n,↑m} e^{−iω_L t}`); the
//! generator is then time independent under the JCM approximation and every
//! element carries its free motional phase `−iω(n−m)`. The *interaction
//! frame* additionally removes the free part `D = ω a†a − kω|↑⟩⟨↑|`, so the
//! resonant generator has no ω at all and off-resonant sideband terms pick up
//! phases `e^{i(n−n'+k)ωt}`. Observables are reported in the motional lab
//! frame; `D` is diagonal, so moving between the two frames is a phase per
//! element.

use nalgebra::DMatrix;

use super::DynamicsError;
use crate::hilbert::{coupling_matrix, HilbertError, RabiTable, TrapParams, VibronicDensityMatrix};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Reference frame for the density matrix handed to a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Laser phase absorbed into ↓↑ coherences; free motional phases kept.
    MotionalLab,
    /// Free evolution under `ω a†a − kω|↑⟩⟨↑|` removed as well.
    Interaction,
}

/// Diagonal of `D = ω a†a − kω|↑⟩⟨↑|` in the vibronic basis.
pub(crate) fn frame_energies(params: &TrapParams, dim_fock: usize) -> Vec<f64> {
    let k = params.k_sideband as f64;
    (0..2 * dim_fock)
        .map(|i| {
            let (s, n) = (i / dim_fock, i % dim_fock);
            params.omega * (n as f64 - if s == 1 { k } else { 0.0 })
        })
        .collect()
}

/// Interaction-frame state at time `t` → motional-lab-frame state.
pub(crate) fn interaction_to_lab(y: &DMatrix<C64>, energies: &[f64], t: f64) -> DMatrix<C64> {
    let phases: Vec<C64> = energies.iter().map(|e| C64::from_polar(1.0, -e * t)).collect();
    DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)] * phases[i] * phases[j].conj())
}

/// Time-independent JCM generator, precomputed from a Rabi table.
///
/// Each basis state has at most one partner: `|↓,n⟩ ↔ |↑,n+k⟩` with coupling
/// `Ω_{n,n+k}/2`. States `|↑,j⟩` with `j < k`, and `|↓,n⟩` whose partner falls
/// outside the truncation, are left uncoupled.
#[derive(Debug, Clone)]
pub struct JcmGenerator {
    dim: usize,
    partner: Vec<usize>,
    half_rabi: Vec<f64>,
    energies: Option<Vec<f64>>,
    half_kappa: f64,
}

impl JcmGenerator {
    pub fn new(
        params: &TrapParams,
        rabi: &RabiTable,
        dim_fock: usize,
        frame: Frame,
    ) -> Result<Self, DynamicsError> {
        let k = params.k_sideband;
        if rabi.k_sideband != k {
            return Err(DynamicsError::Range(format!(
                "Rabi table is for k = {}, parameters have k = {k}",
                rabi.k_sideband
            )));
        }
        if dim_fock <= k {
            return Err(DynamicsError::Range(format!(
                "dim_fock = {dim_fock} leaves no resonant manifold for k = {k}"
            )));
        }
        let manifolds = dim_fock - k;
        if rabi.len() < manifolds {
            return Err(DynamicsError::Range(format!(
                "Rabi table covers {} manifolds, dim_fock = {dim_fock} needs {manifolds}",
                rabi.len()
            )));
        }
        let n = 2 * dim_fock;
        let mut partner: Vec<usize> = (0..n).collect();
        let mut half_rabi = vec![0.0; n];
        for m in 0..manifolds {
            let (lo, hi) = (m, dim_fock + m + k);
            partner[lo] = hi;
            partner[hi] = lo;
            half_rabi[lo] = 0.5 * rabi.values[m];
            half_rabi[hi] = 0.5 * rabi.values[m];
        }
        let energies = match frame {
            Frame::MotionalLab => Some(frame_energies(params, dim_fock)),
            Frame::Interaction => None,
        };
        Ok(JcmGenerator {
            dim: dim_fock,
            partner,
            half_rabi,
            energies,
            half_kappa: 0.5 * params.kappa,
        })
    }

    /// `out = L(ρ)`.
    pub fn apply(&self, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let n = 2 * self.dim;
        let src = rho.as_slice();
        let dst = out.as_mut_slice();
        let partner = &self.partner[..n];
        let half = &self.half_rabi[..n];
        for j in 0..n {
            let pj = self.partner[j];
            let hj = self.half_rabi[j];
            let col = &src[j * n..(j + 1) * n];
            let col_p = &src[pj * n..(pj + 1) * n];
            let o = &mut dst[j * n..(j + 1) * n];
            for i in 0..n {
                let comm = col[partner[i]] * half[i] - col_p[i] * hj;
                // −i·comm
                o[i] = C64::new(comm.im, -comm.re);
            }
            // Measurement damps the ↓↑ and ↑↓ blocks.
            let cross = if j < self.dim { self.dim..n } else { 0..self.dim };
            for i in cross {
                o[i] -= col[i] * self.half_kappa;
            }
            if let Some(e) = &self.energies {
                for i in 0..n {
                    o[i] -= I * (e[i] - e[j]) * col[i];
                }
            }
        }
    }
}

/// `dρ/dt` under the JCM approximation in the requested frame.
pub fn jcm_rhs(
    rho: &VibronicDensityMatrix,
    params: &TrapParams,
    rabi: &RabiTable,
    frame: Frame,
) -> Result<DMatrix<C64>, DynamicsError> {
    let gen = JcmGenerator::new(params, rabi, rho.dim_fock(), frame)?;
    let mut out = DMatrix::zeros(2 * rho.dim_fock(), 2 * rho.dim_fock());
    gen.apply(rho.entries(), &mut out);
    Ok(out)
}

/// Full standing-wave coupling in the interaction frame, keeping every
/// sideband `|n' − n| ≤ cutoff`.
///
/// `⟨↓,n|H(t)|↑,n'⟩ = (Ω₀/2)⟨n|cos[η(a+a†)+φ]|n'⟩ e^{i(n−n'+k)ωt}`.
#[derive(Debug, Clone)]
pub struct SidebandCoupling {
    dim: usize,
    k: usize,
    omega: f64,
    half_kappa: f64,
    /// `(Δn, n, n', Ω₀C_{nn'}/2)` for every retained element.
    terms: Vec<(isize, usize, usize, f64)>,
    min_dn: isize,
    max_dn: isize,
}

impl SidebandCoupling {
    pub fn new(params: &TrapParams, dim_fock: usize, cutoff: usize) -> Result<Self, DynamicsError> {
        let c = coupling_matrix(params, dim_fock)?;
        let cutoff = cutoff as isize;
        Ok(Self::from_filter(params, dim_fock, &c, |dn| dn.abs() <= cutoff))
    }

    /// Only the resonant `Δn = k` band; reproduces the JCM generator.
    pub fn resonant_only(params: &TrapParams, dim_fock: usize) -> Result<Self, DynamicsError> {
        let c = coupling_matrix(params, dim_fock)?;
        let k = params.k_sideband as isize;
        Ok(Self::from_filter(params, dim_fock, &c, |dn| dn == k))
    }

    fn from_filter(
        params: &TrapParams,
        dim: usize,
        c: &DMatrix<f64>,
        keep: impl Fn(isize) -> bool,
    ) -> Self {
        let mut terms = Vec::new();
        for n in 0..dim {
            for m in 0..dim {
                let dn = m as isize - n as isize;
                if keep(dn) && c[(n, m)] != 0.0 {
                    terms.push((dn, n, m, 0.5 * c[(n, m)]));
                }
            }
        }
        let min_dn = terms.iter().map(|t| t.0).min().unwrap_or(0);
        let max_dn = terms.iter().map(|t| t.0).max().unwrap_or(0);
        SidebandCoupling {
            dim,
            k: params.k_sideband,
            omega: params.omega,
            half_kappa: 0.5 * params.kappa,
            terms,
            min_dn,
            max_dn,
        }
    }

    pub fn dim_fock(&self) -> usize {
        self.dim
    }

    /// Highest phase frequency present, in units of ω.
    pub fn max_detuning_order(&self) -> usize {
        let k = self.k as isize;
        (k - self.min_dn).abs().max((k - self.max_dn).abs()) as usize
    }

    /// Upper-right block `B(t)` of the interaction Hamiltonian.
    fn coupling_block(&self, t: f64) -> DMatrix<C64> {
        let k = self.k as isize;
        let phases: Vec<C64> = (self.min_dn..=self.max_dn)
            .map(|dn| C64::from_polar(1.0, (k - dn) as f64 * self.omega * t))
            .collect();
        let mut b = DMatrix::zeros(self.dim, self.dim);
        for &(dn, n, m, h) in &self.terms {
            b[(n, m)] = phases[(dn - self.min_dn) as usize] * h;
        }
        b
    }

    /// `out = L(t)(ρ)`.
    pub fn apply(&self, t: f64, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let d = self.dim;
        let b = self.coupling_block(t);
        let bh = b.adjoint();
        let p = rho.view((0, 0), (d, d));
        let q = rho.view((0, d), (d, d));
        let qh = rho.view((d, 0), (d, d));
        let r = rho.view((d, d), (d, d));
        // H = [[0, B], [B†, 0]];  −i[H, ρ] blockwise.
        let dp = &b * qh - q * &bh;
        let dq = &b * r - p * &b;
        let dr = &bh * q - qh * &b;
        let mi = -I;
        out.view_mut((0, 0), (d, d)).copy_from(&(dp * mi));
        out.view_mut((d, d), (d, d)).copy_from(&(dr * mi));
        let dqh = &bh * p - r * &bh;
        let damp = C64::new(self.half_kappa, 0.0);
        out.view_mut((0, d), (d, d)).copy_from(&(dq * mi - q * damp));
        out.view_mut((d, 0), (d, d)).copy_from(&(dqh * mi - qh * damp));
    }
}

/// `dρ/dt` with the full sideband coupling at time `t` (interaction frame).
pub fn full_rhs(
    rho: &VibronicDensityMatrix,
    t: f64,
    coupling: &SidebandCoupling,
) -> Result<DMatrix<C64>, DynamicsError> {
    if rho.dim_fock() != coupling.dim_fock() {
        return Err(HilbertError::DimensionMismatch {
            expected: coupling.dim_fock(),
            found: rho.dim_fock(),
        }
        .into());
    }
    let n = 2 * rho.dim_fock();
    let mut out = DMatrix::zeros(n, n);
    coupling.apply(t, rho.entries(), &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{compose_initial, initial_state, rabi_table, MotionalStateSpec, DOWN, UP};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(k: usize, kappa: f64) -> TrapParams {
        TrapParams::node(10.0, 1.0, 0.2).with_sideband(k).with_kappa(kappa)
    }

    /// Random Hermitian unit-trace matrix (not necessarily positive).
    fn random_rho(dim: usize, seed: u64) -> VibronicDensityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 * dim;
        let mut m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let tr = m.trace().re;
        for i in 0..n {
            m[(i, i)] += C64::new((1.0 - tr) / n as f64, 0.0);
        }
        VibronicDensityMatrix::from_entries_unchecked(dim, m)
    }

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn coherence_grows_first() {
        let p = params(1, 0.0);
        let dim = 8;
        let table = rabi_table(&p, dim - 1).unwrap();
        let m = initial_state(&MotionalStateSpec::Fock(2), dim).unwrap().matrix;
        let rho = compose_initial(&m, dim).unwrap();
        for frame in [Frame::Interaction, Frame::MotionalLab] {
            let d = jcm_rhs(&rho, &p, &table, frame).unwrap();
            assert_eq!(d[(2, 2)], C64::new(0.0, 0.0));
            let want = C64::new(0.0, 0.5 * table.values[2]);
            assert!((d[(2, dim + 3)] - want).norm() < 1e-15);
            assert!((d[(dim + 3, 2)] - want.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn trace_and_hermiticity_preserved() {
        for k in 0..3 {
            let p = params(k, 0.7);
            let dim = 7;
            let table = rabi_table(&p, dim - 1).unwrap();
            let full = SidebandCoupling::new(&p, dim, k + 4).unwrap();
            for seed in 0..4 {
                let rho = random_rho(dim, seed);
                let mut ds = vec![
                    jcm_rhs(&rho, &p, &table, Frame::Interaction).unwrap(),
                    jcm_rhs(&rho, &p, &table, Frame::MotionalLab).unwrap(),
                ];
                ds.push(full_rhs(&rho, 0.37, &full).unwrap());
                for d in ds {
                    assert!(d.trace().norm() < 1e-12);
                    assert!(max_diff(&d, &d.adjoint()) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dark_states_frozen() {
        let p = params(2, 0.3);
        let dim = 6;
        let table = rabi_table(&p, dim - 1).unwrap();
        let mut e = DMatrix::zeros(2 * dim, 2 * dim);
        e[(dim, dim)] = C64::new(0.5, 0.0);
        e[(dim + 1, dim + 1)] = C64::new(0.5, 0.0);
        let rho = VibronicDensityMatrix::new(dim, e).unwrap();
        let d = jcm_rhs(&rho, &p, &table, Frame::Interaction).unwrap();
        assert!(d.iter().all(|z| z.norm() == 0.0));
        let _ = (UP, DOWN);
    }

    #[test]
    fn resonant_band_equals_jcm() {
        for k in 0..3 {
            let p = params(k, 0.4);
            let dim = 6;
            let table = rabi_table(&p, dim - 1).unwrap();
            let res = SidebandCoupling::resonant_only(&p, dim).unwrap();
            let rho = random_rho(dim, 11 + k as u64);
            let jcm = jcm_rhs(&rho, &p, &table, Frame::Interaction).unwrap();
            for t in [0.0, 0.3, 2.0] {
                assert!(max_diff(&full_rhs(&rho, t, &res).unwrap(), &jcm) < 1e-12);
            }
        }
    }

    #[test]
    fn lab_frame_adds_free_rotation() {
        let p = params(1, 0.2);
        let dim = 5;
        let table = rabi_table(&p, dim - 1).unwrap();
        let rho = random_rho(dim, 3);
        let lab = jcm_rhs(&rho, &p, &table, Frame::MotionalLab).unwrap();
        let int = jcm_rhs(&rho, &p, &table, Frame::Interaction).unwrap();
        let e = frame_energies(&p, dim);
        for i in 0..2 * dim {
            for j in 0..2 * dim {
                let free = -I * (e[i] - e[j]) * rho.entries()[(i, j)];
                assert!((lab[(i, j)] - int[(i, j)] - free).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn short_table_is_range_error() {
        let p = params(1, 0.0);
        let table = rabi_table(&p, 3).unwrap();
        let rho = VibronicDensityMatrix::maximally_mixed(8);
        assert!(matches!(
            jcm_rhs(&rho, &p, &table, Frame::Interaction),
            Err(DynamicsError::Range(_))
        ));
        let coupling = SidebandCoupling::new(&p, 4, 5).unwrap();
        assert!(full_rhs(&rho, 0.0, &coupling).is_err());
    }

    #[test]
    fn detuning_orders() {
        let p = params(1, 0.0);
        let c = SidebandCoupling::new(&p, 10, 5).unwrap();
        // Δn runs over −5..=5 (minus the zero carrier at a node); k − Δn tops out at 6.
        assert_eq!(c.max_detuning_order(), 6);
        assert_eq!(SidebandCoupling::resonant_only(&p, 10).unwrap().max_detuning_order(), 0);
    }
}
