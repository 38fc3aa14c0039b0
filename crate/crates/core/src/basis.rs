//! Orthonormal Hermitian operator bases.
//!
//! The generalized Gell-Mann basis of `M_d(ℂ)` is ordered as
//!
//! 1. symmetric elements `(|k⟩⟨l| + |l⟩⟨k|)/√2`, `k < l` lexicographic,
//! 2. antisymmetric elements `-i(|k⟩⟨l| - |l⟩⟨k|)/√2`, same order,
//! 3. diagonal traceless elements, `j = 1..d-1`,
//! 4. the identity `I/√d`, always last.
//!
//! Every element has unit Hilbert-Schmidt norm, so the first `d² - 1`
//! elements index the rows and columns of a Kossakowski matrix.

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, I};

/// Default orthonormality tolerance.
pub const TAU_ORTH: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct OperatorBasis {
    d: usize,
    elements: Vec<ComplexMatrix>,
}

impl OperatorBasis {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    /// The `d² - 1` traceless elements.
    pub fn traceless(&self) -> &[ComplexMatrix] {
        &self.elements[..self.elements.len() - 1]
    }

    pub fn identity_element(&self) -> &ComplexMatrix {
        self.elements.last().expect("basis is never empty")
    }

    /// Coefficients `⟨F_i, A⟩` of `A` in this basis.
    pub fn expand(&self, a: &ComplexMatrix) -> Result<Vec<C64>> {
        a.ensure_shape(self.d, self.d)?;
        self.elements.iter().map(|f| hs_inner(f, a)).collect()
    }

    /// Coefficients of `A` on the traceless elements only.
    pub fn expand_traceless(&self, a: &ComplexMatrix) -> Result<Vec<C64>> {
        a.ensure_shape(self.d, self.d)?;
        self.traceless().iter().map(|f| hs_inner(f, a)).collect()
    }

    /// `Σ_i c_i F_i` over the first `coeffs.len()` elements.
    pub fn combine(&self, coeffs: &[C64]) -> ComplexMatrix {
        assert!(coeffs.len() <= self.elements.len(), "too many coefficients");
        let mut out = ComplexMatrix::zeros(self.d, self.d);
        for (c, f) in coeffs.iter().zip(&self.elements) {
            if *c != C64::new(0.0, 0.0) {
                out += &f.scale(*c);
            }
        }
        out
    }

    /// The Gram matrix `⟨F_i, F_j⟩`.
    pub fn gram(&self) -> ComplexMatrix {
        let n = self.elements.len();
        ComplexMatrix::from_fn(n, n, |i, j| hs_inner_unchecked(&self.elements[i], &self.elements[j]))
    }

    /// Largest deviation of the Gram matrix from the identity, together with
    /// the largest `|Tr F_i|` over the traceless block.
    pub fn orthonormality_error(&self) -> (f64, f64) {
        let gram_err = self.gram().max_abs_diff(&ComplexMatrix::identity(self.elements.len()));
        let trace_err = self.traceless().iter().map(|f| f.trace().norm()).fold(0.0, f64::max);
        (gram_err, trace_err)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let (gram_err, trace_err) = self.orthonormality_error();
        if gram_err > tol || trace_err > tol {
            return Err(Error::Numerical(format!(
                "basis fails orthonormality: gram error {gram_err:e}, trace error {trace_err:e}"
            )));
        }
        Ok(())
    }
}

/// Builds the generalized Gell-Mann basis for `d ≥ 2`.
pub fn build_gellmann_basis(d: usize) -> Result<OperatorBasis> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("operator basis needs d >= 2, got {d}")));
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut elements = Vec::with_capacity(d * d);

    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|k| (k + 1..d).map(move |l| (k, l))).collect();
    for &(k, l) in &pairs {
        let mut f = ComplexMatrix::zeros(d, d);
        f[(k, l)] = C64::new(inv_sqrt2, 0.0);
        f[(l, k)] = C64::new(inv_sqrt2, 0.0);
        elements.push(f);
    }
    for &(k, l) in &pairs {
        let mut f = ComplexMatrix::zeros(d, d);
        f[(k, l)] = -I * inv_sqrt2;
        f[(l, k)] = I * inv_sqrt2;
        elements.push(f);
    }
    for j in 1..d {
        let norm = 1.0 / ((j * (j + 1)) as f64).sqrt();
        let mut f = ComplexMatrix::zeros(d, d);
        for m in 0..j {
            f[(m, m)] = C64::new(norm, 0.0);
        }
        f[(j, j)] = C64::new(-(j as f64) * norm, 0.0);
        elements.push(f);
    }
    elements.push(ComplexMatrix::identity(d).scale_real(1.0 / (d as f64).sqrt()));

    Ok(OperatorBasis { d, elements })
}

fn hs_inner_unchecked(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x.conj() * y).sum()
}

/// Hilbert-Schmidt inner product `⟨A, B⟩ = Tr(A†B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "inner product of {}x{} and {}x{} matrices",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(hs_inner_unchecked(a, b))
}

/// Hilbert-Schmidt norm `√⟨A, A⟩`.
pub fn hs_norm(a: &ComplexMatrix) -> f64 {
    a.frobenius_norm()
}
