use nalgebra::DMatrix;

use super::state::hermiticity_defect;
use super::{build_ladder, HilbertError};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObservableKind {
    Position,
    Momentum,
    PositionSquared,
    MomentumSquared,
    Energy,
    Number,
    Parity,
    Custom(String),
}

/// Unit attached to a motional observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableUnit {
    /// `x₀ = √(ħ/2mω)`
    X0,
    /// `p₀ = √(ħmω/2)`
    P0,
    X0Squared,
    P0Squared,
    /// `ħω`
    HbarOmega,
    Dimensionless,
}

impl ObservableUnit {
    pub fn symbol(self) -> &'static str {
        match self {
            ObservableUnit::X0 => "x0",
            ObservableUnit::P0 => "p0",
            ObservableUnit::X0Squared => "x0^2",
            ObservableUnit::P0Squared => "p0^2",
            ObservableUnit::HbarOmega => "hbar*omega",
            ObservableUnit::Dimensionless => "1",
        }
    }
}

/// Hermitian operator on the trap mode, in the Fock basis.
///
/// In scaled units `x = a + a†` and `p = i(a† − a)`, so the oscillator
/// Hamiltonian is `(x² + p²)/4` in units of ħω.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionalObservable {
    pub kind: ObservableKind,
    pub matrix: DMatrix<C64>,
    pub unit: ObservableUnit,
}

fn ladder_pair(dim: usize) -> (DMatrix<C64>, DMatrix<C64>) {
    build_ladder(dim.max(2)).expect("dimension >= 2")
}

// Squares are formed on a larger space so the truncated block is exact.
fn exact_square(op: impl Fn(usize) -> DMatrix<C64>, dim: usize) -> DMatrix<C64> {
    let big = op(dim + 2);
    (&big * &big).view((0, 0), (dim, dim)).into_owned()
}

fn position_matrix(dim: usize) -> DMatrix<C64> {
    let (a, adag) = ladder_pair(dim);
    (a + adag).view((0, 0), (dim, dim)).into_owned()
}

fn momentum_matrix(dim: usize) -> DMatrix<C64> {
    let (a, adag) = ladder_pair(dim);
    ((adag - a) * C64::new(0.0, 1.0)).view((0, 0), (dim, dim)).into_owned()
}

fn diagonal(dim: usize, f: impl Fn(usize) -> f64) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(f(i), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

impl MotionalObservable {
    pub fn position(dim: usize) -> Self {
        MotionalObservable {
            kind: ObservableKind::Position,
            matrix: position_matrix(dim),
            unit: ObservableUnit::X0,
        }
    }

    pub fn momentum(dim: usize) -> Self {
        MotionalObservable {
            kind: ObservableKind::Momentum,
            matrix: momentum_matrix(dim),
            unit: ObservableUnit::P0,
        }
    }

    pub fn position_squared(dim: usize) -> Self {
        MotionalObservable {
            kind: ObservableKind::PositionSquared,
            matrix: exact_square(position_matrix, dim),
            unit: ObservableUnit::X0Squared,
        }
    }

    pub fn momentum_squared(dim: usize) -> Self {
        MotionalObservable {
            kind: ObservableKind::MomentumSquared,
            matrix: exact_square(momentum_matrix, dim),
            unit: ObservableUnit::P0Squared,
        }
    }

    /// `a†a + ½` in units of ħω.
    pub fn energy(dim: usize) -> Self {
        MotionalObservable {
            kind: ObservableKind::Energy,
            matrix: diagonal(dim, |n| n as f64 + 0.5),
            unit: ObservableUnit::HbarOmega,
        }
    }

    pub fn number(dim: usize) -> Self {
        MotionalObservable {
            kind: ObservableKind::Number,
            matrix: diagonal(dim, |n| n as f64),
            unit: ObservableUnit::Dimensionless,
        }
    }

    /// `(−1)^{a†a}`.
    pub fn parity(dim: usize) -> Self {
        MotionalObservable {
            kind: ObservableKind::Parity,
            matrix: diagonal(dim, |n| if n % 2 == 0 { 1.0 } else { -1.0 }),
            unit: ObservableUnit::Dimensionless,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        matrix: DMatrix<C64>,
        unit: ObservableUnit,
    ) -> Result<Self, HilbertError> {
        if !matrix.is_square() {
            return Err(HilbertError::InvalidState("observable must be square".into()));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > 1e-12 {
            return Err(HilbertError::InvalidState(format!(
                "observable not Hermitian: defect {defect:.3e}"
            )));
        }
        Ok(MotionalObservable {
            kind: ObservableKind::Custom(name.into()),
            matrix,
            unit,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `⟨n|O|n⟩`.
    pub fn diagonal_element(&self, n: usize) -> Option<f64> {
        (n < self.dim()).then(|| self.matrix[(n, n)].re)
    }
}

/// `Tr(ρ^cm O)`; an imaginary residue above 1e-10 is rejected.
pub fn expectation(reduced: &DMatrix<C64>, obs: &MotionalObservable) -> Result<f64, HilbertError> {
    if reduced.nrows() != obs.dim() || reduced.ncols() != obs.dim() {
        return Err(HilbertError::DimensionMismatch {
            expected: obs.dim(),
            found: reduced.nrows(),
        });
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..obs.dim() {
        for j in 0..obs.dim() {
            acc += reduced[(i, j)] * obs.matrix[(j, i)];
        }
    }
    if acc.im.abs() >= 1e-10 {
        return Err(HilbertError::InvalidState(format!(
            "expectation has imaginary residue {:.3e}",
            acc.im
        )));
    }
    Ok(acc.re)
}
