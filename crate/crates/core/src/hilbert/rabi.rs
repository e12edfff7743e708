//! Nonlinear k-quantum Rabi frequencies `Ω_{n,n+k} = Ω₀⟨n|cos[η(a+a†)+φ]|n+k⟩`.
//!
//! The standing-wave cosine is evaluated by functional calculus on a truncated
//! Fock space: diagonalise the real symmetric `η(a+a†)`, apply
//! `cos(λ+φ) = cos φ cos λ − sin φ sin λ` to the spectrum and reassemble. The
//! truncation dimension is doubled until the requested block stops moving.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{HilbertError, TrapParams};

/// Smallest evaluation dimension used for the matrix cosine.
pub const MIN_EVAL_DIM: usize = 64;
const MAX_EVAL_DIM: usize = 2048;
const REL_TOL: f64 = 1e-12;
// Eigensolver rounding sits near 3e-15 in cosine units; tabulated entries
// that vanish (Laguerre zeros) are compared against this floor.
const TABLE_FLOOR: f64 = 1e-14;
// Far off-diagonal elements of the full block decay like η^|Δn| and are
// pure rounding noise below this level.
const BLOCK_FLOOR: f64 = 1e-13;

/// `cos[η(a+a†) + φ]` on `dim` Fock levels (truncation artefacts included).
pub fn cosine_matrix(eta: f64, phi: f64, dim: usize) -> DMatrix<f64> {
    let x = DMatrix::<f64>::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            eta * (j as f64).sqrt()
        } else if i == j + 1 {
            eta * (i as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(x);
    let (cphi, sphi) = (phi.cos(), phi.sin());
    let f: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| cphi * l.cos() - sphi * l.sin())
        .collect();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, fj) in f.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*fj);
    }
    scaled * v.transpose()
}

fn close(x: f64, y: f64, floor: f64) -> bool {
    (x - y).abs() <= REL_TOL * y.abs() + floor
}

/// Entries `(n, n + k)` agree between the two blocks.
fn band_converged(a: &DMatrix<f64>, b: &DMatrix<f64>, k: usize) -> bool {
    (0..a.nrows().saturating_sub(k)).all(|n| close(a[(n, n + k)], b[(n, n + k)], TABLE_FLOOR))
}

fn block_converged(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| close(*x, *y, BLOCK_FLOOR))
}

/// Top-left `dim` block of the standing-wave cosine, converged in the
/// evaluation dimension under `converged`. Returns the block and the
/// dimension used.
fn converged_block(
    eta: f64,
    phi: f64,
    dim: usize,
    converged: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> bool,
) -> Result<(DMatrix<f64>, usize), HilbertError> {
    let mut eval = MIN_EVAL_DIM.max(2 * dim);
    let mut current = cosine_matrix(eta, phi, eval).view((0, 0), (dim, dim)).into_owned();
    while eval <= MAX_EVAL_DIM {
        let doubled = cosine_matrix(eta, phi, 2 * eval)
            .view((0, 0), (dim, dim))
            .into_owned();
        if converged(&current, &doubled) {
            return Ok((current, eval));
        }
        current = doubled;
        eval *= 2;
    }
    Err(HilbertError::NoConvergence(MAX_EVAL_DIM))
}

/// Tabulated `Ω_{n,n+k}` in rad/s for `n = 0..=n_max − k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiTable {
    pub k_sideband: usize,
    pub values: Vec<f64>,
    /// Fock dimension at which the matrix cosine was evaluated.
    pub eval_dim: usize,
}

impl RabiTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Ω_{n,n+k}`, or a range error past the end of the table.
    pub fn get(&self, n: usize) -> Result<f64, HilbertError> {
        self.values.get(n).copied().ok_or_else(|| {
            HilbertError::InvalidRange(format!(
                "Rabi table covers n <= {}, requested n = {n}",
                self.values.len() as isize - 1
            ))
        })
    }
}

/// Rabi table evaluated at one fixed cosine dimension, without the
/// convergence loop.
pub fn rabi_table_at_dim(
    params: &TrapParams,
    n_max: usize,
    eval_dim: usize,
) -> Result<RabiTable, HilbertError> {
    let k = params.k_sideband;
    if n_max < k {
        return Err(HilbertError::InvalidRange(format!(
            "n_max = {n_max} is below the sideband order k = {k}"
        )));
    }
    if eval_dim <= n_max {
        return Err(HilbertError::InvalidDimension {
            dim: eval_dim,
            reason: "evaluation dimension must exceed n_max",
        });
    }
    let c = cosine_matrix(params.eta, params.phi, eval_dim);
    let values = (0..=n_max - k)
        .map(|n| params.omega0 * c[(n, n + k)])
        .collect();
    Ok(RabiTable {
        k_sideband: k,
        values,
        eval_dim,
    })
}

/// `Ω_{n,n+k}` for `n = 0..=n_max − k`, converged so that doubling the
/// evaluation dimension moves no entry by more than 1e-12 relative (with a
/// 1e-14·Ω₀ floor for entries that vanish).
pub fn rabi_table(params: &TrapParams, n_max: usize) -> Result<RabiTable, HilbertError> {
    let k = params.k_sideband;
    if n_max < k {
        return Err(HilbertError::InvalidRange(format!(
            "n_max = {n_max} is below the sideband order k = {k}"
        )));
    }
    let (block, eval_dim) =
        converged_block(params.eta, params.phi, n_max + 1, |a, b| band_converged(a, b, k))?;
    let values = (0..=n_max - k)
        .map(|n| params.omega0 * block[(n, n + k)])
        .collect();
    Ok(RabiTable {
        k_sideband: k,
        values,
        eval_dim,
    })
}

/// Single nonlinear Rabi frequency `Ω_{n,n+k}`, rad/s.
pub fn rabi_frequency(n: usize, params: &TrapParams) -> Result<f64, HilbertError> {
    rabi_table(params, n + params.k_sideband)?.get(n)
}

/// `Ω₀⟨n|cos[η(a+a†)+φ]|n'⟩` for all `n, n' < dim_fock`, converged in the
/// evaluation dimension. Drives the full (non-JCM) coupling.
pub fn coupling_matrix(params: &TrapParams, dim_fock: usize) -> Result<DMatrix<f64>, HilbertError> {
    let (block, _) = converged_block(params.eta, params.phi, dim_fock, block_converged)?;
    Ok(block * params.omega0)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    fn params(eta: f64, phi: f64, k: usize) -> TrapParams {
        TrapParams::node(1.0, 1.0, eta).with_phi(phi).with_sideband(k)
    }

    #[test]
    fn zero_eta_carrier_is_omega0() {
        let mut p = params(0.0, 0.0, 0);
        p.omega0 = 3.5;
        let t = rabi_table(&p, 5).unwrap();
        assert_eq!(t.len(), 6);
        for v in &t.values {
            assert!((v - 3.5).abs() < 1e-14);
        }
    }

    #[test]
    fn lamb_dicke_first_sideband() {
        let p = params(1e-4, -FRAC_PI_2, 1);
        let w = rabi_frequency(0, &p).unwrap();
        assert!((w / 1e-4 - 1.0).abs() < 1e-4);
        let t = rabi_table(&p, 12).unwrap();
        for (n, v) in t.values.iter().enumerate() {
            let ld = 1e-4 * ((n + 1) as f64).sqrt();
            assert!((v / ld - 1.0).abs() < 1e-3, "n={n}");
        }
    }

    #[test]
    fn eta_point_two_frozen_value() {
        // scipy.linalg.cosm at dim 128 and e^{-η²/2}·η·L₀¹(η²) both give this.
        let w = rabi_frequency(0, &params(0.2, -FRAC_PI_2, 1)).unwrap();
        assert!((w - 0.196_039_734_661_351).abs() < 1e-13);
        assert!((w - 0.196_039_7).abs() < 1e-7);
    }

    #[test]
    fn phase_flip_changes_sign() {
        let minus = rabi_frequency(0, &params(0.2, -FRAC_PI_2, 1)).unwrap();
        let plus = rabi_frequency(0, &params(0.2, FRAC_PI_2, 1)).unwrap();
        assert!((plus + minus).abs() < 1e-14);
        assert!(plus < 0.0);
    }

    #[test]
    fn table_range_error() {
        assert!(matches!(
            rabi_table(&params(0.2, 0.0, 3), 2),
            Err(HilbertError::InvalidRange(_))
        ));
        let t = rabi_table(&params(0.2, 0.0, 1), 4).unwrap();
        assert!(t.get(3).is_ok());
        assert!(t.get(4).is_err());
    }

    #[test]
    fn cosine_matrix_is_symmetric() {
        let c = cosine_matrix(0.3, 0.7, 40);
        for i in 0..40 {
            for j in 0..40 {
                assert!((c[(i, j)] - c[(j, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coupling_block_matches_table() {
        let p = params(0.25, -FRAC_PI_2, 1);
        let c = coupling_matrix(&p, 10).unwrap();
        let t = rabi_table(&p, 9).unwrap();
        for n in 0..9 {
            assert!((c[(n, n + 1)] - t.values[n]).abs() < 1e-13);
        }
    }
}
