//! Eigen-analysis of superoperators and relaxation profiles.
//!
//! A trace-preserving generator always has a zero eigenvalue. The remaining
//! `d² - 1` eigenvalues define the relaxation rates `Γ = -Re λ`, times
//! `T = 1/Γ` and frequencies `ω = Im λ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::{GKLSGenerator, Superoperator};
use crate::linalg;
use crate::matrix::{ComplexMatrix, C64};
use crate::serde_ext::vec_maybe_inf;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpectrumTolerances {
    /// Zero-mode tolerance relative to `max(1, ‖M‖_F)`.
    pub zero_rel: f64,
    /// Conjugate-pairing tolerance relative to `max(1, spectral radius)`.
    pub pair_rel: f64,
    /// Eigenvector condition number above which the spectrum counts as defective.
    pub kappa_max: f64,
    /// `|Σλ - Tr M|` tolerance relative to `max(1, ‖M‖_F)`.
    pub trace_rel: f64,
}

impl Default for SpectrumTolerances {
    fn default() -> Self {
        Self { zero_rel: 1e-9, pair_rel: 1e-8, kappa_max: 1e12, trace_rel: 1e-10 }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorSpectrum {
    d: usize,
    eigenvalues: Vec<C64>,
    eigen_operators: Vec<ComplexMatrix>,
    /// Eigenvectors of the superoperator as columns (unit norm).
    vectors: ComplexMatrix,
    zero_mode_index: usize,
    condition: f64,
    defective: bool,
    tau_zero: f64,
    tau_pair: f64,
    trace: C64,
    norm: f64,
    tolerances: SpectrumTolerances,
}

impl GeneratorSpectrum {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// `u_α` reshaped to `d x d`, unit Hilbert-Schmidt norm.
    pub fn eigen_operators(&self) -> &[ComplexMatrix] {
        &self.eigen_operators
    }

    pub fn eigenvector_matrix(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn zero_mode_index(&self) -> usize {
        self.zero_mode_index
    }

    pub fn is_defective(&self) -> bool {
        self.defective
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn tau_zero(&self) -> f64 {
        self.tau_zero
    }

    pub fn tau_pair(&self) -> f64 {
        self.tau_pair
    }

    pub fn superoperator_trace(&self) -> C64 {
        self.trace
    }

    /// Indices of every mode except the designated zero mode.
    pub fn relaxing_modes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.eigenvalues.len()).filter(move |&i| i != self.zero_mode_index)
    }

    /// Stationary state from the zero-mode eigen-operator: phase-fixed so
    /// its trace is positive, Hermitian-projected, trace-normalized.
    pub fn stationary_state(&self) -> Result<ComplexMatrix> {
        let u = &self.eigen_operators[self.zero_mode_index];
        let tr = u.trace();
        if tr.norm() <= 1e-12 {
            return Err(Error::Numerical("zero mode has no trace component".into()));
        }
        let phased = u.scale(tr.conj() / tr.norm()).hermitian_part();
        let t = phased.trace().re;
        Ok(phased.scale_real(1.0 / t))
    }
}

/// Diagonalizes `s` with default tolerances.
pub fn compute_spectrum(s: &Superoperator) -> Result<GeneratorSpectrum> {
    compute_spectrum_with(s, SpectrumTolerances::default())
}

pub fn generator_spectrum(g: &GKLSGenerator) -> Result<GeneratorSpectrum> {
    compute_spectrum(&g.to_superoperator())
}

pub fn compute_spectrum_with(s: &Superoperator, tol: SpectrumTolerances) -> Result<GeneratorSpectrum> {
    let d = s.dim();
    let m = s.matrix();
    let norm = m.frobenius_norm();
    let eig = linalg::eigen(m)?;
    let n = eig.values.len();

    let tau_zero = tol.zero_rel * norm.max(1.0);
    let radius = eig.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tau_pair = tol.pair_rel * radius.max(1.0);

    let mut eigen_operators = Vec::with_capacity(n);
    let mut vectors = eig.vectors;
    for j in 0..n {
        let col = vectors.column(j);
        let norm_j = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_j == 0.0 || !norm_j.is_finite() {
            return Err(Error::Numerical(format!("eigenvector {j} has norm {norm_j}")));
        }
        for i in 0..n {
            vectors[(i, j)] /= norm_j;
        }
        eigen_operators.push(ComplexMatrix::unvectorize(&vectors.column(j), d)?);
    }

    let candidates: Vec<usize> = (0..n).filter(|&i| eig.values[i].norm() <= tau_zero).collect();
    let zero_mode_index = match candidates.len() {
        0 => {
            let closest = eig.values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
            return Err(Error::NotTracePreserving { closest, tolerance: tau_zero });
        }
        1 => candidates[0],
        // Degenerate stationary structure: the stationary direction is the
        // one with the largest trace component.
        _ => *candidates
            .iter()
            .max_by(|&&a, &&b| {
                let ta = eigen_operators[a].trace().norm();
                let tb = eigen_operators[b].trace().norm();
                ta.total_cmp(&tb).then(eig.values[b].norm().total_cmp(&eig.values[a].norm()))
            })
            .expect("non-empty"),
    };

    let condition = linalg::condition_number(&vectors)?;
    Ok(GeneratorSpectrum {
        d,
        eigenvalues: eig.values,
        eigen_operators,
        vectors,
        zero_mode_index,
        condition,
        defective: !(condition <= tol.kappa_max),
        tau_zero,
        tau_pair,
        trace: s.trace(),
        norm,
        tolerances: tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelaxationProfile {
    pub d: usize,
    /// `Γ_α`, descending.
    pub rates: Vec<f64>,
    /// `T_α = 1/Γ_α`, `+∞` for non-decaying modes.
    #[serde(serialize_with = "vec_maybe_inf")]
    pub times: Vec<f64>,
    /// `ω_α = Im λ_α`, aligned with `rates`.
    pub frequencies: Vec<f64>,
    /// Index into the spectrum's eigenvalue list for each entry.
    pub modes: Vec<usize>,
}

impl RelaxationProfile {
    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.first().copied().unwrap_or(0.0)
    }
}

/// Drops the zero mode and converts the remaining eigenvalues to rates,
/// times and frequencies. Rates within `τ_zero` of zero are set to zero.
pub fn relaxation_profile(spec: &GeneratorSpectrum) -> RelaxationProfile {
    let mut entries: Vec<(usize, f64, f64)> = spec
        .relaxing_modes()
        .map(|i| {
            let lambda = spec.eigenvalues[i];
            let raw = -lambda.re;
            let rate = if raw <= spec.tau_zero { 0.0 } else { raw };
            (i, rate, lambda.im)
        })
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.2.abs().total_cmp(&b.2.abs())).then(a.0.cmp(&b.0)));
    RelaxationProfile {
        d: spec.d,
        rates: entries.iter().map(|e| e.1).collect(),
        times: entries.iter().map(|e| if e.1 > 0.0 { 1.0 / e.1 } else { f64::INFINITY }).collect(),
        frequencies: entries.iter().map(|e| e.2).collect(),
        modes: entries.iter().map(|e| e.0).collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    /// Largest `|λ_i - conj(λ_j)|` over the greedy conjugate matching.
    pub pairing_distance: f64,
    pub pairing_ok: bool,
    /// Largest `Re λ` over the non-zero modes.
    pub max_real_part: f64,
    pub real_part_ok: bool,
    pub zero_mode_modulus: f64,
    /// `|Σλ - Tr M|`.
    pub trace_error: f64,
    pub trace_ok: bool,
    pub pass: bool,
}

/// Greedy matching of each eigenvalue with the nearest unmatched conjugate;
/// returns the largest matched distance.
pub fn conjugate_pairing_distance(values: &[C64]) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re).then(values[a].im.total_cmp(&values[b].im)));
    let mut matched = vec![false; values.len()];
    let mut worst: f64 = 0.0;
    for &i in &order {
        if matched[i] {
            continue;
        }
        matched[i] = true;
        let target = values[i].conj();
        let self_dist = (values[i] - target).norm();
        let best = order
            .iter()
            .filter(|&&j| !matched[j])
            .map(|&j| (j, (values[j] - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((j, dist)) if dist < self_dist => {
                matched[j] = true;
                worst = worst.max(dist);
            }
            _ => worst = worst.max(self_dist),
        }
    }
    worst
}

/// Largest nearest-neighbour distance under greedy matching of two
/// eigenvalue multisets; infinite when lengths differ.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, dist) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(dist);
    }
    worst
}

pub fn verify_spectral_structure(spec: &GeneratorSpectrum) -> StructureReport {
    let pairing_distance = conjugate_pairing_distance(&spec.eigenvalues);
    let max_real_part = spec.relaxing_modes().map(|i| spec.eigenvalues[i].re).fold(f64::NEG_INFINITY, f64::max);
    let max_real_part = if max_real_part.is_finite() { max_real_part } else { 0.0 };
    let sum: C64 = spec.eigenvalues.iter().sum();
    let trace_error = (sum - spec.trace).norm();
    let pairing_ok = pairing_distance <= spec.tau_pair;
    let real_part_ok = max_real_part <= spec.tau_zero;
    let trace_ok = trace_error <= spec.tolerances.trace_rel * spec.norm.max(1.0);
    StructureReport {
        pairing_distance,
        pairing_ok,
        max_real_part,
        real_part_ok,
        zero_mode_modulus: spec.eigenvalues[spec.zero_mode_index].norm(),
        trace_error,
        trace_ok,
        pass: pairing_ok && real_part_ok && trace_ok,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenvalueWire {
    pub re: f64,
    pub im: f64,
}

/// Spectrum report wire format.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<EigenvalueWire>,
    pub rates: Vec<f64>,
    #[serde(serialize_with = "vec_maybe_inf")]
    pub times: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub zero_mode_index: usize,
    pub defective: bool,
}

impl SpectrumReport {
    pub fn new(spec: &GeneratorSpectrum, profile: &RelaxationProfile) -> Self {
        Self {
            eigenvalues: spec.eigenvalues.iter().map(|z| EigenvalueWire { re: z.re, im: z.im }).collect(),
            rates: profile.rates.clone(),
            times: profile.times.clone(),
            frequencies: profile.frequencies.clone(),
            zero_mode_index: spec.zero_mode_index,
            defective: spec.defective,
        }
    }
}
