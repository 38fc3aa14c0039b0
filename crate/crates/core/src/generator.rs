//! GKLS generators `𝓛 = 𝓗 + 𝓓` in Kossakowski form.
//!
//! A generator is stored canonically as a Hermitian Hamiltonian `H` and a
//! positive semidefinite Kossakowski matrix `C` indexed by the traceless
//! Gell-Mann elements `F_1 .. F_{d²-1}`:
//!
//! ```text
//! 𝓛(ρ) = -i[H, ρ] + ½ Σ_ij C_ij (2 F_i ρ F_j† - {F_j† F_i, ρ})
//! ```
//!
//! Lindblad-operator lists are accepted as input and converted to this form.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::basis::{build_gellmann_basis, hs_inner, OperatorBasis};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::{ComplexMatrix, C64, I, ZERO};
use crate::random::gaussian_matrix;

/// Hermiticity tolerance, scaled by `max(1, max|A_ij|)`.
pub const TAU_HERM: f64 = 1e-12;
/// PSD tolerance relative to `‖C‖_HS`.
pub const PSD_REL_TOL: f64 = 1e-10;

/// A square matrix validated to be Hermitian. The stored value is exactly
/// Hermitian (the input's Hermitian part).
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        m.ensure_square()?;
        let deviation = m.hermiticity_error();
        let tolerance = TAU_HERM * m.max_abs().max(1.0);
        if deviation > tolerance {
            return Err(Error::NotHermitian { deviation, tolerance });
        }
        Ok(Self(m.hermitian_part()))
    }

    pub fn zeros(d: usize) -> Self {
        Self(ComplexMatrix::zeros(d, d))
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }
}

/// Positive semidefinite coefficient matrix of the dissipator.
#[derive(Clone, Debug, PartialEq)]
pub struct KossakowskiMatrix {
    matrix: ComplexMatrix,
    min_eigenvalue: f64,
}

impl KossakowskiMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let n = m.ensure_square()?;
        let h = HermitianMatrix::new(m)?.into_matrix();
        let tolerance = psd_tolerance(&h);
        let min_eigenvalue =
            if n == 0 { 0.0 } else { linalg::hermitian_eigenvalues(&h)?.into_iter().fold(f64::INFINITY, f64::min) };
        if min_eigenvalue < -tolerance {
            return Err(Error::NotCompletelyPositive { min_eigenvalue, tolerance });
        }
        Ok(Self { matrix: h, min_eigenvalue })
    }

    pub fn zeros(n: usize) -> Self {
        Self { matrix: ComplexMatrix::zeros(n, n), min_eigenvalue: 0.0 }
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn tolerance(&self) -> f64 {
        psd_tolerance(&self.matrix)
    }
}

fn psd_tolerance(c: &ComplexMatrix) -> f64 {
    PSD_REL_TOL * c.frobenius_norm()
}

/// One dissipative channel `γ (L ρ L† - ½{L†L, ρ})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladTerm {
    pub rate: f64,
    #[serde(rename = "L")]
    pub operator: ComplexMatrix,
}

impl LindbladTerm {
    pub fn new(rate: f64, operator: ComplexMatrix) -> Self {
        Self { rate, operator }
    }

    /// Direct evaluation of this channel on `ρ`.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let l = &self.operator;
        let ld = l.adjoint();
        let ldl = &ld * l;
        let mut out = &(l * rho) * &ld;
        out -= &ldl.anticommutator(rho).scale_real(0.5);
        out.scale_real(self.rate)
    }
}

/// Eigen-decomposition of `C` rewritten as jump operators
/// `L_k = Σ_i v_i^(k) F_i` with weights `p_k`.
#[derive(Clone, Debug)]
pub struct LindbladDecomposition {
    /// Terms with strictly positive weight, weights descending.
    pub terms: Vec<LindbladTerm>,
}

impl LindbladDecomposition {
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|t| t.rate)
    }

    /// `Σ_k p_k (L_k ρ L_k† - ½{L_k†L_k, ρ})`.
    pub fn dissipator(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
        for t in &self.terms {
            out += &t.apply(rho);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Vectorization {
    /// `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
    ColumnStacking,
}

/// The `d² x d²` matrix of a linear map on `M_d(ℂ)`.
#[derive(Clone, Debug, Serialize)]
pub struct Superoperator {
    d: usize,
    convention: Vectorization,
    matrix: ComplexMatrix,
}

impl Superoperator {
    /// Wraps a raw column-stacking matrix. No GKLS structure is assumed,
    /// which makes this the entry point for non-physical test maps.
    pub fn from_matrix(d: usize, matrix: ComplexMatrix) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension("superoperator over d = 0".into()));
        }
        matrix.ensure_shape(d * d, d * d)?;
        Ok(Self { d, convention: Vectorization::ColumnStacking, matrix })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn convention(&self) -> Vectorization {
        self.convention
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest `|Σ_i M[(i,i), col]|`; zero for trace-preserving maps.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.d;
        (0..d * d).map(|col| (0..d).map(|i| self.matrix[(i * d + i, col)]).sum::<C64>().norm()).fold(0.0, f64::max)
    }
}

/// A linear map on `d x d` matrices.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix>;
}

impl LinearMap for Superoperator {
    fn dim(&self) -> usize {
        self.d
    }

    fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        a.ensure_shape(self.d, self.d)?;
        ComplexMatrix::unvectorize(&self.matrix.mul_vec(&a.vectorize()), self.d)
    }
}

impl LinearMap for GKLSGenerator {
    fn dim(&self) -> usize {
        self.d
    }

    fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.apply_generator(a)
    }
}

#[derive(Clone, Debug)]
pub struct GKLSGenerator {
    d: usize,
    hamiltonian: HermitianMatrix,
    kossakowski: KossakowskiMatrix,
    basis: Arc<OperatorBasis>,
}

impl GKLSGenerator {
    pub fn new(hamiltonian: HermitianMatrix, kossakowski: KossakowskiMatrix) -> Result<Self> {
        let d = hamiltonian.dim();
        let basis = build_gellmann_basis(d)?;
        Self::with_basis(hamiltonian, kossakowski, Arc::new(basis))
    }

    pub fn with_basis(
        hamiltonian: HermitianMatrix,
        kossakowski: KossakowskiMatrix,
        basis: Arc<OperatorBasis>,
    ) -> Result<Self> {
        let d = hamiltonian.dim();
        if basis.dim() != d {
            return Err(Error::DimensionMismatch(format!("basis is for d = {}, Hamiltonian is {d}x{d}", basis.dim())));
        }
        if kossakowski.size() != d * d - 1 {
            return Err(Error::DimensionMismatch(format!(
                "Kossakowski matrix must be {n}x{n} for d = {d}, got {m}x{m}",
                n = d * d - 1,
                m = kossakowski.size()
            )));
        }
        Ok(Self { d, hamiltonian, kossakowski, basis })
    }

    /// Validates raw `(H, C)` matrices.
    pub fn from_matrices(h: ComplexMatrix, c: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(h)?, KossakowskiMatrix::new(c)?)
    }

    /// Builds the canonical form of `-i[H, ρ] + Σ_k γ_k D[L_k](ρ)`.
    pub fn from_lindblad(h: ComplexMatrix, ops: &[LindbladTerm]) -> Result<Self> {
        let h = HermitianMatrix::new(h)?;
        let basis = Arc::new(build_gellmann_basis(h.dim())?);
        let (c, correction) = kossakowski_from_lindblad(ops, &basis)?;
        let h = HermitianMatrix::new(h.as_matrix() + correction.as_matrix())?;
        Self::with_basis(h, c, basis)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn hamiltonian(&self) -> &HermitianMatrix {
        &self.hamiltonian
    }

    pub fn kossakowski(&self) -> &KossakowskiMatrix {
        &self.kossakowski
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    pub fn shared_basis(&self) -> Arc<OperatorBasis> {
        Arc::clone(&self.basis)
    }

    /// Evaluates `𝓛(ρ)` straight from the defining double sum.
    pub fn apply_generator(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        rho.ensure_shape(self.d, self.d)?;
        let h = self.hamiltonian.as_matrix();
        let mut out = h.commutator(rho).scale(-I);
        let c = self.kossakowski.as_matrix();
        let f = self.basis.traceless();
        let mut diss = ComplexMatrix::zeros(self.d, self.d);
        for (i, fi) in f.iter().enumerate() {
            let fi_rho = fi * rho;
            for (j, fj) in f.iter().enumerate() {
                let cij = c[(i, j)];
                if cij == ZERO {
                    continue;
                }
                let fj_dag = fj.adjoint();
                let mut term = (&fi_rho * &fj_dag).scale_real(2.0);
                term -= &(&fj_dag * fi).anticommutator(rho);
                diss += &term.scale(cij);
            }
        }
        out += &diss.scale_real(0.5);
        Ok(out)
    }

    /// Column-stacking matrix of `𝓛`:
    /// `-i(I⊗H - Hᵀ⊗I) + ½ Σ_ij C_ij (2 F̄_j⊗F_i - I⊗F_j†F_i - (F_j†F_i)ᵀ⊗I)`.
    pub fn to_superoperator(&self) -> Superoperator {
        let d = self.d;
        let id = ComplexMatrix::identity(d);
        let h = self.hamiltonian.as_matrix();
        let mut m = (&id.kron(h) - &h.transpose().kron(&id)).scale(-I);

        let c = self.kossakowski.as_matrix();
        let f = self.basis.traceless();
        // Σ_ij C_ij F̄_j ⊗ F_i = Σ_i (Σ_j C_ij F̄_j) ⊗ F_i and
        // K = Σ_ij C_ij F_j†F_i = Σ_j F_j† (Σ_i C_ij F_i).
        let mut k = ComplexMatrix::zeros(d, d);
        for (i, fi) in f.iter().enumerate() {
            let mut row_comb = ComplexMatrix::zeros(d, d);
            let mut col_comb = ComplexMatrix::zeros(d, d);
            for (j, fj) in f.iter().enumerate() {
                if c[(i, j)] != ZERO {
                    row_comb += &fj.conj().scale(c[(i, j)]);
                }
                if c[(j, i)] != ZERO {
                    col_comb += &fj.scale(c[(j, i)]);
                }
            }
            m += &row_comb.kron(fi);
            k += &(&fi.adjoint() * &col_comb);
        }
        m -= &(&id.kron(&k) + &k.transpose().kron(&id)).scale_real(0.5);
        Superoperator::from_matrix(d, m).expect("shape is d² x d² by construction")
    }

    /// Trace of the superoperator, which equals `-d Tr C`.
    pub fn generator_trace(&self) -> f64 {
        self.to_superoperator().trace().re
    }

    /// Matrix of `𝓛` in the operator basis, `G_ij = ⟨F_i, 𝓛(F_j)⟩`, built
    /// from [`GKLSGenerator::apply_generator`]. Unitarily similar to the
    /// vectorized superoperator, so it carries the same spectrum.
    pub fn matrix_in_basis(&self) -> Result<ComplexMatrix> {
        let elems = self.basis.elements();
        let n = elems.len();
        let images = elems.iter().map(|f| self.apply_generator(f)).collect::<Result<Vec<_>>>()?;
        let mut g = ComplexMatrix::zeros(n, n);
        for (j, img) in images.iter().enumerate() {
            for (i, fi) in elems.iter().enumerate() {
                g[(i, j)] = hs_inner(fi, img)?;
            }
        }
        Ok(g)
    }

    /// Splits `C = Σ_k p_k v^(k) v^(k)†` into unit-norm traceless jump
    /// operators. Eigenvalues within the PSD tolerance below zero are
    /// clamped to zero; zero-weight terms are dropped.
    pub fn decompose_lindblad(&self) -> Result<LindbladDecomposition> {
        let c = self.kossakowski.as_matrix();
        let tolerance = self.kossakowski.tolerance();
        let eig = linalg::hermitian_eigen(c)?;
        let mut terms = Vec::new();
        for (k, &p) in eig.values.iter().enumerate().rev() {
            if p < -tolerance {
                return Err(Error::NotCompletelyPositive { min_eigenvalue: p, tolerance });
            }
            if p <= 0.0 {
                continue;
            }
            let v = eig.vectors.column(k);
            terms.push(LindbladTerm::new(p, self.basis.combine(&v)));
        }
        Ok(LindbladDecomposition { terms })
    }
}

/// Converts `Σ_k γ_k D[L_k]` with arbitrary `L_k` into a Kossakowski matrix
/// plus the Hamiltonian correction contributed by the trace parts of the
/// `L_k`.
///
/// Writing `L = L₀ + a I` with `a = Tr L / d`, the identity part shifts the
/// dissipator by a commutator: `D[L] = D[L₀] - i[(i/2)(ā L₀ - a L₀†), ·]`.
pub fn kossakowski_from_lindblad(
    ops: &[LindbladTerm],
    basis: &OperatorBasis,
) -> Result<(KossakowskiMatrix, HermitianMatrix)> {
    let d = basis.dim();
    let n = d * d - 1;
    let mut c = ComplexMatrix::zeros(n, n);
    let mut correction = ComplexMatrix::zeros(d, d);
    for op in ops {
        if !(op.rate.is_finite() && op.rate >= 0.0) {
            return Err(Error::InvalidRate(op.rate));
        }
        op.operator.ensure_shape(d, d)?;
        let a = op.operator.trace() / d as f64;
        let traceless = &op.operator - &ComplexMatrix::identity(d).scale(a);
        let v = basis.expand_traceless(&traceless)?;
        for i in 0..n {
            for j in 0..n {
                c[(i, j)] += v[i] * v[j].conj() * op.rate;
            }
        }
        let shift = &traceless.scale(a.conj()) - &traceless.adjoint().scale(a);
        correction += &shift.scale(I * (0.5 * op.rate));
    }
    Ok((KossakowskiMatrix::new(c)?, HermitianMatrix::new(correction)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct HermiticityReport {
    pub trials: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Probes `𝓛(A)† = 𝓛(A†)` on random non-Hermitian `A`.
pub fn check_hermiticity_preservation<M: LinearMap, R: Rng + ?Sized>(
    map: &M,
    trials: usize,
    tolerance: f64,
    rng: &mut R,
) -> Result<HermiticityReport> {
    let d = map.dim();
    let mut max_deviation: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let a = gaussian_matrix(rng, d, d);
        let lhs = map.apply(&a)?.adjoint();
        let rhs = map.apply(&a.adjoint())?;
        max_deviation = max_deviation.max((&lhs - &rhs).frobenius_norm());
    }
    Ok(HermiticityReport { trials: trials.max(1), max_deviation, tolerance, pass: max_deviation <= tolerance })
}

/// Tr C, the quantity `ΣΓ / d`.
pub fn dissipation_strength(g: &GKLSGenerator) -> f64 {
    g.kossakowski.trace()
}

/// `√2 · Tr C`, the per-rate bound reached at the end of the proof chain.
pub fn rate_bound(g: &GKLSGenerator) -> f64 {
    SQRT_2 * g.kossakowski.trace()
}

#[derive(Serialize, Deserialize)]
struct GeneratorWire {
    d: usize,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    h: Option<ComplexMatrix>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    c: Option<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lindblad_ops: Option<Vec<LindbladTerm>>,
}

impl GeneratorWire {
    fn into_generator(self) -> Result<GKLSGenerator> {
        let d = self.d;
        if d < 2 {
            return Err(Error::InvalidDimension(format!("generator needs d >= 2, got {d}")));
        }
        let h = self.h.unwrap_or_else(|| ComplexMatrix::zeros(d, d));
        h.ensure_shape(d, d)?;
        match (self.c, self.lindblad_ops) {
            (Some(c), None) => GKLSGenerator::from_matrices(h, c),
            (None, Some(ops)) => GKLSGenerator::from_lindblad(h, &ops),
            (Some(_), Some(_)) => Err(Error::InvalidShape("give either \"C\" or \"lindblad_ops\", not both".into())),
            (None, None) => Err(Error::InvalidShape("generator needs \"C\" or \"lindblad_ops\"".into())),
        }
    }
}

impl GKLSGenerator {
    /// Parses the generator JSON schema, keeping the typed error.
    pub fn from_json(text: &str) -> Result<Self> {
        let wire: GeneratorWire =
            serde_json::from_str(text).map_err(|e| Error::Malformed(format!("generator JSON: {e}")))?;
        wire.into_generator()
    }
}

impl Serialize for GKLSGenerator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GeneratorWire {
            d: self.d,
            h: Some(self.hamiltonian.as_matrix().clone()),
            c: Some(self.kossakowski.as_matrix().clone()),
            lindblad_ops: None,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GKLSGenerator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        GeneratorWire::deserialize(deserializer)?.into_generator().map_err(D::Error::custom)
    }
}
