//! Closed-form generators used as reference cases.

use crate::generator::{GKLSGenerator, HermitianMatrix, KossakowskiMatrix};
use crate::matrix::{ComplexMatrix, C64, I};

/// Pauli matrices by name: `'x'`, `'y'`, `'z'`, anything else gives `I₂`.
pub fn pauli(which: char) -> ComplexMatrix {
    match which {
        'x' => ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        'y' => ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => -I,
            (1, 0) => I,
            _ => C64::new(0.0, 0.0),
        }),
        'z' => ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
        _ => ComplexMatrix::identity(2),
    }
}

/// Qubit dephasing with `C = diag(0, 0, rate)`, i.e. weight on `σz/√2`.
pub fn dephasing(rate: f64) -> GKLSGenerator {
    dephasing_in(2, rate)
}

/// Dephasing along the last diagonal Gell-Mann element in dimension `d`.
pub fn dephasing_in(d: usize, rate: f64) -> GKLSGenerator {
    let n = d * d - 1;
    let mut c = ComplexMatrix::zeros(n, n);
    c[(n - 1, n - 1)] = C64::new(rate, 0.0);
    GKLSGenerator::new(HermitianMatrix::zeros(d), KossakowskiMatrix::new(c).expect("diagonal PSD"))
        .expect("consistent shapes")
}

/// Qubit depolarizing channel `C = (γ/2) I₃`.
pub fn depolarizing(gamma: f64) -> GKLSGenerator {
    let c = ComplexMatrix::identity(3).scale_real(gamma / 2.0);
    GKLSGenerator::new(HermitianMatrix::zeros(2), KossakowskiMatrix::new(c).expect("identity PSD"))
        .expect("consistent shapes")
}

/// Dephasing at `rate` plus a precession `H = (ω/2) σz`.
pub fn precessing_dephasing(omega: f64, rate: f64) -> GKLSGenerator {
    let g = dephasing(rate);
    GKLSGenerator::new(
        HermitianMatrix::new(pauli('z').scale_real(omega / 2.0)).expect("Hermitian"),
        g.kossakowski().clone(),
    )
    .expect("consistent shapes")
}

/// `|ψ⟩⟨ψ|` for `|+⟩ = (|0⟩ + |1⟩)/√2`.
pub fn plus_state() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]])
}
