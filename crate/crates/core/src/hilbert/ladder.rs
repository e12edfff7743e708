use nalgebra::DMatrix;

use super::HilbertError;
use crate::C64;

/// Fock-basis annihilation and creation operators on `dim_fock` levels.
///
/// `⟨n−1|a|n⟩ = √n`; the creation operator is the conjugate transpose. On the
/// truncated space `[a, a†]` equals the identity except at the last diagonal
/// entry, which is `−(dim_fock − 1)`.
pub fn build_ladder(dim_fock: usize) -> Result<(DMatrix<C64>, DMatrix<C64>), HilbertError> {
    if dim_fock < 2 {
        return Err(HilbertError::InvalidDimension {
            dim: dim_fock,
            reason: "ladder operators need at least two Fock levels",
        });
    }
    let mut a = DMatrix::<C64>::zeros(dim_fock, dim_fock);
    for n in 1..dim_fock {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    Ok((a, adag))
}

/// `a†a` as a diagonal matrix.
pub fn number_operator(dim_fock: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim_fock, dim_fock, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}
