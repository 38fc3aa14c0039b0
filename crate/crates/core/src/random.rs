//! Random matrices and generators.
//!
//! Complex Gaussian entries have independent real and imaginary parts of
//! variance ½, so `E|z|² = 1`. All samplers consume the RNG in a fixed
//! order, which the ensemble's reproducibility guarantee relies on.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::basis::build_gellmann_basis;
use crate::generator::{GKLSGenerator, HermitianMatrix, KossakowskiMatrix};
use crate::matrix::{ComplexMatrix, C64};

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * FRAC_1_SQRT_2
}

/// Ginibre matrix with standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Gaussian unitary ensemble sample `scale · (A + A†)/2`.
pub fn gue<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> ComplexMatrix {
    let a = gaussian_matrix(rng, d, d);
    if scale == 0.0 {
        return ComplexMatrix::zeros(d, d);
    }
    a.hermitian_part().scale_real(scale)
}

/// Random full-rank density matrix `GG† / Tr(GG†)` (Hilbert-Schmidt measure).
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, d, d);
    let w = (&g * &g.adjoint()).hermitian_part();
    let tr = w.trace().re;
    w.scale_real(1.0 / tr)
}

/// Exactly Hermitian `G G†`.
pub fn gram(g: &ComplexMatrix) -> ComplexMatrix {
    let n = g.rows();
    let mut c = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: C64 = (0..g.cols()).map(|k| g[(i, k)] * g[(j, k)].conj()).sum();
            c[(i, j)] = v;
            c[(j, i)] = v.conj();
        }
        c[(i, i)] = C64::new(c[(i, i)].re, 0.0);
    }
    c
}

/// Draws `(H, G)` for a random generator: `H` from the GUE, `G` an
/// `(d²-1) x rank` Ginibre factor.
pub fn generator_factors<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    hamiltonian_scale: f64,
    rank: Option<usize>,
) -> (ComplexMatrix, ComplexMatrix) {
    let n = d * d - 1;
    let h = gue(rng, d, hamiltonian_scale);
    let g = gaussian_matrix(rng, n, rank.unwrap_or(n).clamp(1, n));
    (h, g)
}

/// Assembles `C = scale · G G† / (d² - 1)`.
pub fn generator_from_factors(
    h: ComplexMatrix,
    g: &ComplexMatrix,
    kossakowski_scale: f64,
    basis: Arc<crate::basis::OperatorBasis>,
) -> crate::Result<GKLSGenerator> {
    let n = g.rows();
    let c = gram(g).scale_real(kossakowski_scale / n as f64);
    GKLSGenerator::with_basis(HermitianMatrix::new(h)?, KossakowskiMatrix::new(c)?, basis)
}

/// Random GKLS generator with Wishart Kossakowski matrix.
pub fn random_generator<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    hamiltonian_scale: f64,
    rank: Option<usize>,
    kossakowski_scale: f64,
) -> GKLSGenerator {
    let (h, g) = generator_factors(rng, d, hamiltonian_scale, rank);
    let basis = Arc::new(build_gellmann_basis(d).expect("d >= 2"));
    generator_from_factors(h, &g, kossakowski_scale, basis).expect("Wishart factors give a valid generator")
}
