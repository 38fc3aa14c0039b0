//! The derivation of the rate bound, one numerical check per step.
//!
//! For a normalized eigen-operator `u` of `𝓛` with eigenvalue `λ = -Γ + iω`
//! and jump operators `L_k` with weights `p_k` (unit norm, traceless):
//!
//! ```text
//! 2Γ = Σ_k p_k (⟨[L_k,u], L_k u⟩ + ⟨[L_k,u†], L_k u†⟩)                  identity
//!    ≤ Σ_k p_k (‖[L_k,u]‖ ‖L_k u‖ + ‖[L_k,u†]‖ ‖L_k u†‖)                Schwarz
//!    ≤ Σ_k p_k (‖[L_k,u]‖ + ‖[L_k,u†]‖) ‖L_k‖                         ‖AB‖ ≤ ‖A‖‖B‖
//!    ≤ 2√2 Σ_k p_k ‖L_k‖²  = 2√2 Tr C                                 ‖[A,B]‖ ≤ √2‖A‖‖B‖
//! ```
//!
//! All norms are Hilbert-Schmidt.

use std::f64::consts::SQRT_2;

use rand::Rng;
use serde::Serialize;

use crate::basis::{hs_inner, hs_norm};
use crate::error::{Error, Result};
use crate::generator::{GKLSGenerator, LindbladDecomposition};
use crate::matrix::{ComplexMatrix, C64};
use crate::random::gaussian_matrix;
use crate::spectrum::GeneratorSpectrum;

/// Absolute slack allowed in the commutator inequality.
pub const COMMUTATOR_TOLERANCE: f64 = 1e-12;
/// Relative tolerance for the per-mode identity and chain steps.
pub const MODE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProofStepReport {
    pub step: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs` for inequalities, `-|rhs - lhs|` for identities.
    pub slack: f64,
    pub pass: bool,
}

impl ProofStepReport {
    fn inequality(step: &'static str, mode: Option<usize>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs - lhs;
        Self { step, mode, lhs, rhs, slack, pass: slack >= -tolerance }
    }

    fn identity(step: &'static str, mode: Option<usize>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = -(rhs - lhs).abs();
        Self { step, mode, lhs, rhs, slack, pass: slack >= -tolerance }
    }
}

/// `‖[A,B]‖ ≤ √2 ‖A‖ ‖B‖`.
pub fn check_bw_inequality(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ProofStepReport> {
    let n = a.ensure_square()?;
    b.ensure_shape(n, n)?;
    let lhs = hs_norm(&a.commutator(b));
    let rhs = SQRT_2 * hs_norm(a) * hs_norm(b);
    Ok(ProofStepReport::inequality("commutator_inequality", None, lhs, rhs, COMMUTATOR_TOLERANCE))
}

/// `‖[A,B]‖ / (√2 ‖A‖ ‖B‖)`, zero when either factor vanishes.
pub fn commutator_ratio(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let denom = SQRT_2 * hs_norm(a) * hs_norm(b);
    if denom == 0.0 {
        0.0
    } else {
        hs_norm(&a.commutator(b)) / denom
    }
}

/// Hill climbing on the commutator ratio over pairs of `d x d` matrices.
/// Returns the best pair found and its ratio.
pub fn commutator_ratio_ascent<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    iterations: usize,
) -> (ComplexMatrix, ComplexMatrix, f64) {
    let mut a = gaussian_matrix(rng, d, d);
    let mut b = gaussian_matrix(rng, d, d);
    let mut best = commutator_ratio(&a, &b);
    let mut step = 0.3;
    for _ in 0..iterations {
        let da = gaussian_matrix(rng, d, d).scale_real(step);
        let db = gaussian_matrix(rng, d, d).scale_real(step);
        let a2 = &a + &da;
        let b2 = &b + &db;
        let r = commutator_ratio(&a2, &b2);
        if r > best {
            best = r;
            a = a2.scale_real(1.0 / hs_norm(&a2));
            b = b2.scale_real(1.0 / hs_norm(&b2));
        } else {
            step = (step * 0.995).max(1e-6);
        }
    }
    (a, b, best)
}

/// The per-mode quantities of the derivation for one operator `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeQuantities {
    /// `Σ p (⟨[L,u], Lu⟩ + ⟨[L,u†], Lu†⟩)`; real in exact arithmetic.
    pub identity_sum: C64,
    pub schwarz: f64,
    pub norm_bound: f64,
    pub commutator_bound: f64,
}

pub fn mode_quantities(decomp: &LindbladDecomposition, u: &ComplexMatrix) -> Result<ModeQuantities> {
    let ud = u.adjoint();
    let u_norm = hs_norm(u);
    let mut q =
        ModeQuantities { identity_sum: C64::new(0.0, 0.0), schwarz: 0.0, norm_bound: 0.0, commutator_bound: 0.0 };
    for term in &decomp.terms {
        let (p, l) = (term.rate, &term.operator);
        let c1 = l.commutator(u);
        let c2 = l.commutator(&ud);
        let lu = l.try_matmul(u)?;
        let lud = l.try_matmul(&ud)?;
        let l_norm = hs_norm(l);
        q.identity_sum += (hs_inner(&c1, &lu)? + hs_inner(&c2, &lud)?) * p;
        q.schwarz += p * (hs_norm(&c1) * hs_norm(&lu) + hs_norm(&c2) * hs_norm(&lud));
        q.norm_bound += p * (hs_norm(&c1) + hs_norm(&c2)) * l_norm;
        q.commutator_bound += p * 2.0 * SQRT_2 * l_norm * l_norm * u_norm;
    }
    Ok(q)
}

fn require_regular(spec: &GeneratorSpectrum, what: &'static str) -> Result<()> {
    if spec.is_defective() {
        return Err(Error::DefectiveSpectrum(what));
    }
    Ok(())
}

fn mode_scale(g: &GKLSGenerator) -> f64 {
    (2.0 * SQRT_2 * g.kossakowski().trace()).max(1.0)
}

/// Identity step on every relaxing mode: the jump-operator sum equals `2Γ`.
pub fn check_rate_identity(g: &GKLSGenerator, spec: &GeneratorSpectrum) -> Result<Vec<ProofStepReport>> {
    require_regular(spec, "the rate identity check")?;
    let decomp = g.decompose_lindblad()?;
    let tolerance = MODE_TOLERANCE * mode_scale(g);
    spec.relaxing_modes()
        .map(|i| {
            let q = mode_quantities(&decomp, &spec.eigen_operators()[i])?;
            let two_gamma = -2.0 * spec.eigenvalues()[i].re;
            let mut report =
                ProofStepReport::identity("rate_identity", Some(i), q.identity_sum.re, two_gamma, tolerance);
            // A non-real sum is as much a failure as a wrong real part.
            if q.identity_sum.im.abs() > tolerance {
                report.pass = false;
                report.slack = report.slack.min(-q.identity_sum.im.abs());
            }
            Ok(report)
        })
        .collect()
}

/// The three inequalities following the identity, plus the closing
/// equality `2√2 Σ p_k ‖L_k‖² = 2√2 Tr C`, on every relaxing mode.
pub fn check_chain_bound(g: &GKLSGenerator, spec: &GeneratorSpectrum) -> Result<Vec<ProofStepReport>> {
    require_regular(spec, "the chain bound check")?;
    let decomp = g.decompose_lindblad()?;
    let tolerance = MODE_TOLERANCE * mode_scale(g);
    let final_bound = 2.0 * SQRT_2 * g.kossakowski().trace();
    let mut out = Vec::new();
    for i in spec.relaxing_modes() {
        let q = mode_quantities(&decomp, &spec.eigen_operators()[i])?;
        let two_gamma = -2.0 * spec.eigenvalues()[i].re;
        let m = Some(i);
        out.push(ProofStepReport::inequality("schwarz", m, two_gamma, q.schwarz, tolerance));
        out.push(ProofStepReport::inequality("submultiplicative", m, q.schwarz, q.norm_bound, tolerance));
        out.push(ProofStepReport::inequality("commutator_norm", m, q.norm_bound, q.commutator_bound, tolerance));
        out.push(ProofStepReport::identity("kossakowski_trace", m, q.commutator_bound, final_bound, tolerance));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProofCheckReport {
    pub d: usize,
    pub steps: Vec<ProofStepReport>,
    pub max_identity_residual: f64,
    pub pass: bool,
}

/// Runs the identity and chain checks on every mode of `g`.
pub fn check_proof(g: &GKLSGenerator, spec: &GeneratorSpectrum) -> Result<ProofCheckReport> {
    let mut steps = check_rate_identity(g, spec)?;
    let max_identity_residual = steps.iter().map(|s| -s.slack).fold(0.0, f64::max);
    steps.extend(check_chain_bound(g, spec)?);
    let pass = steps.iter().all(|s| s.pass);
    Ok(ProofCheckReport { d: g.dim(), steps, max_identity_residual, pass })
}
