//! Semigroup evolution `ρ_t = exp(t𝓛) ρ₀` and the decomposition of
//! expectation values into decaying exponentials.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::generator::{GKLSGenerator, HermitianMatrix, Superoperator};
use crate::linalg;
use crate::matrix::{ComplexMatrix, C64};
use crate::spectrum::generator_spectrum;

/// State validation: Hermiticity (scaled by `max(1, max|ρ_ij|)`), trace, and
/// smallest eigenvalue.
pub const STATE_HERMITICITY_TOL: f64 = 1e-12;
pub const STATE_TRACE_TOL: f64 = 1e-10;
pub const STATE_PSD_TOL: f64 = 1e-10;

/// Base trajectory tolerances, multiplied by `max(1, ‖M‖_F t_max)`.
pub const TRAJECTORY_TRACE_TOL: f64 = 1e-9;
pub const TRAJECTORY_HERMITICITY_TOL: f64 = 1e-10;
pub const TRAJECTORY_PSD_TOL: f64 = 1e-8;

/// Relative spread of grid steps below which one step propagator is reused.
const UNIFORM_STEP_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        m.ensure_square().map_err(|e| Error::InvalidState(e.to_string()))?;
        let herm = m.hermiticity_error();
        if herm > STATE_HERMITICITY_TOL * m.max_abs().max(1.0) {
            return Err(Error::InvalidState(format!("not Hermitian, max |ρ - ρ†| = {herm:e}")));
        }
        let tr = m.trace();
        if (tr - 1.0).norm() > STATE_TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let m = m.hermitian_part();
        let min = linalg::hermitian_eigenvalues(&m)?.first().copied().unwrap_or(0.0);
        if min < -STATE_PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    /// `|ψ⟩⟨ψ|` for a normalized `ψ`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let n = psi.len();
        let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if n == 0 || norm_sqr == 0.0 || !norm_sqr.is_finite() {
            return Err(Error::InvalidState("state vector must be nonzero".into()));
        }
        Self::new(ComplexMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / norm_sqr))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(ComplexMatrix::identity(d).scale_real(1.0 / d as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(deserializer)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Strictly increasing, nonnegative sample times.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidGrid("time grid is empty".into()));
        }
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::InvalidGrid(format!("times must be finite and >= 0, got {t}")));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(format!("times must increase strictly, got {} then {}", w[0], w[1])));
        }
        Ok(Self(times))
    }

    /// `n_points` equally spaced times on `[0, t_max]`.
    pub fn uniform(t_max: f64, n_points: usize) -> Result<Self> {
        if n_points == 0 {
            return Err(Error::InvalidGrid("n_points must be at least 1".into()));
        }
        if n_points == 1 {
            return Self::new(vec![0.0]);
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidGrid(format!("t_max must be finite and > 0, got {t_max}")));
        }
        let dt = t_max / (n_points - 1) as f64;
        Self::new((0..n_points).map(|k| if k + 1 == n_points { t_max } else { k as f64 * dt }).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.0.last().expect("grid is never empty")
    }

    /// The common step, if all steps agree to relative precision.
    pub fn uniform_step(&self) -> Option<f64> {
        let steps: Vec<f64> = self.0.windows(2).map(|w| w[1] - w[0]).collect();
        let first = *steps.first()?;
        steps.iter().all(|s| (s - first).abs() <= UNIFORM_STEP_REL * first.max(self.t_max())).then_some(first)
    }
}

impl<'de> Deserialize<'de> for TimeGrid {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        TimeGrid::new(Vec::deserialize(deserializer)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SnapshotDiagnostics {
    /// `|Tr ρ - 1|`.
    pub trace_error: f64,
    pub hermiticity_error: f64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
}

impl SnapshotDiagnostics {
    pub fn of(rho: &ComplexMatrix) -> Result<Self> {
        Ok(Self {
            trace_error: (rho.trace() - 1.0).norm(),
            hermiticity_error: rho.hermiticity_error(),
            min_eigenvalue: linalg::hermitian_eigenvalues(&rho.hermitian_part())?.first().copied().unwrap_or(0.0),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
    pub diagnostics: Vec<SnapshotDiagnostics>,
    /// `‖M‖_F · t_max`, the conditioning scale of the propagators.
    pub scale: f64,
}

/// Evolves `ρ₀` under `g` on `grid`.
pub fn evolve(g: &GKLSGenerator, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    evolve_superoperator(&g.to_superoperator(), rho0.as_matrix(), grid)
}

/// Evolution under an arbitrary superoperator; the initial matrix is not
/// validated, so non-physical maps can be probed.
pub fn evolve_superoperator(s: &Superoperator, rho0: &ComplexMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    let d = s.dim();
    rho0.ensure_shape(d, d)?;
    let m = s.matrix();
    let v0 = rho0.vectorize();
    let times = grid.times();

    let mut states = Vec::with_capacity(times.len());
    match grid.uniform_step() {
        Some(dt) => {
            let step = linalg::expm(&m.scale_real(dt))?;
            let mut v = if times[0] == 0.0 { v0 } else { linalg::expm(&m.scale_real(times[0]))?.mul_vec(&v0) };
            states.push(ComplexMatrix::unvectorize(&v, d)?);
            for _ in 1..times.len() {
                v = step.mul_vec(&v);
                states.push(ComplexMatrix::unvectorize(&v, d)?);
            }
        }
        None => {
            for &t in times {
                let v = if t == 0.0 { v0.clone() } else { linalg::expm(&m.scale_real(t))?.mul_vec(&v0) };
                states.push(ComplexMatrix::unvectorize(&v, d)?);
            }
        }
    }
    let diagnostics = states.iter().map(SnapshotDiagnostics::of).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times: times.to_vec(), states, diagnostics, scale: m.frobenius_norm() * grid.t_max() })
}

#[derive(Clone, Debug, Serialize)]
pub struct PhysicalityReport {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub trace_tolerance: f64,
    pub hermiticity_tolerance: f64,
    pub psd_tolerance: f64,
    /// Snapshot indices breaching any tolerance.
    pub breaches: Vec<usize>,
    pub pass: bool,
}

pub fn physicality_report(traj: &Trajectory) -> PhysicalityReport {
    let factor = traj.scale.max(1.0);
    let (trace_tol, herm_tol, psd_tol) =
        (TRAJECTORY_TRACE_TOL * factor, TRAJECTORY_HERMITICITY_TOL * factor, TRAJECTORY_PSD_TOL * factor);
    let breaches: Vec<usize> = traj
        .diagnostics
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            !(s.trace_error <= trace_tol && s.hermiticity_error <= herm_tol && s.min_eigenvalue >= -psd_tol)
        })
        .map(|(i, _)| i)
        .collect();
    let diag = &traj.diagnostics;
    PhysicalityReport {
        max_trace_error: diag.iter().map(|s| s.trace_error).fold(0.0, f64::max),
        max_hermiticity_error: diag.iter().map(|s| s.hermiticity_error).fold(0.0, f64::max),
        min_eigenvalue: diag.iter().map(|s| s.min_eigenvalue).fold(f64::INFINITY, f64::min),
        trace_tolerance: trace_tol,
        hermiticity_tolerance: herm_tol,
        psd_tolerance: psd_tol,
        pass: breaches.is_empty(),
        breaches,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpectationMode {
    pub rate: f64,
    pub frequency: f64,
    pub amplitude_re: f64,
    pub amplitude_im: f64,
}

impl ExpectationMode {
    pub fn amplitude(&self) -> C64 {
        C64::new(self.amplitude_re, self.amplitude_im)
    }

    pub fn eigenvalue(&self) -> C64 {
        C64::new(-self.rate, self.frequency)
    }
}

/// `⟨A⟩_t = constant + Σ_α c_α exp((-Γ_α + iω_α) t)`.
#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    pub constant: f64,
    pub modes: Vec<ExpectationMode>,
    /// Largest deviation from the directly evolved values on the grid.
    pub reconstruction_error: f64,
}

impl Decomposition {
    pub fn evaluate(&self, t: f64) -> C64 {
        let mut s = C64::new(self.constant, 0.0);
        for m in &self.modes {
            s += m.amplitude() * (m.eigenvalue() * t).exp();
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpectationSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest `|Im Tr(A ρ_t)|`.
    pub max_imaginary: f64,
    pub valid_decomposition: bool,
    pub decomposition: Option<Decomposition>,
}

/// `Tr(A u)`.
fn pair_trace(a: &ComplexMatrix, u: &ComplexMatrix) -> C64 {
    let n = a.rows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * u[(j, i)];
        }
    }
    s
}

/// Values `Tr(A ρ_t)` from the exponential, plus their spectral
/// decomposition when the spectrum is not defective. Degenerate eigenvalues
/// (within the pairing tolerance) are merged into one mode, and zero modes
/// into the constant.
pub fn expectation_series(
    g: &GKLSGenerator,
    rho0: &DensityMatrix,
    observable: &ComplexMatrix,
    grid: &TimeGrid,
) -> Result<ExpectationSeries> {
    let d = g.dim();
    observable.ensure_shape(d, d)?;
    let a = HermitianMatrix::new(observable.clone())?.into_matrix();
    let traj = evolve(g, rho0, grid)?;
    let raw: Vec<C64> = traj.states.iter().map(|rho| pair_trace(&a, rho)).collect();
    let values: Vec<f64> = raw.iter().map(|z| z.re).collect();
    let max_imaginary = raw.iter().map(|z| z.im.abs()).fold(0.0, f64::max);

    let spec = generator_spectrum(g)?;
    if spec.is_defective() {
        return Ok(ExpectationSeries {
            times: traj.times,
            values,
            max_imaginary,
            valid_decomposition: false,
            decomposition: None,
        });
    }

    let coeffs = linalg::solve_vec(spec.eigenvector_matrix(), &rho0.as_matrix().vectorize())?;
    let lambdas = spec.eigenvalues();
    let amplitudes: Vec<C64> = coeffs.iter().zip(spec.eigen_operators()).map(|(c, u)| c * pair_trace(&a, u)).collect();

    let mut constant = C64::new(0.0, 0.0);
    let mut groups: Vec<(C64, C64)> = Vec::new();
    for (lambda, amp) in lambdas.iter().zip(&amplitudes) {
        if lambda.norm() <= spec.tau_zero() {
            constant += amp;
        } else if let Some(group) = groups.iter_mut().find(|(l, _)| (l - lambda).norm() <= spec.tau_pair()) {
            group.1 += amp;
        } else {
            groups.push((*lambda, *amp));
        }
    }
    let amp_floor = 1e-14 * a.frobenius_norm().max(1.0);
    let mut modes: Vec<ExpectationMode> = groups
        .into_iter()
        .filter(|(_, amp)| amp.norm() > amp_floor)
        .map(|(l, amp)| ExpectationMode { rate: -l.re, frequency: l.im, amplitude_re: amp.re, amplitude_im: amp.im })
        .collect();
    modes.sort_by(|x, y| x.rate.total_cmp(&y.rate).then(x.frequency.total_cmp(&y.frequency)));

    let mut decomposition = Decomposition { constant: constant.re, modes, reconstruction_error: 0.0 };
    decomposition.reconstruction_error =
        traj.times.iter().zip(&values).map(|(&t, &v)| (decomposition.evaluate(t) - v).norm()).fold(0.0, f64::max);
    Ok(ExpectationSeries {
        times: traj.times,
        values,
        max_imaginary,
        valid_decomposition: true,
        decomposition: Some(decomposition),
    })
}

/// Least-squares slope of `-log|v - constant|` against `t`, over points
/// where the deviation is nonzero.
pub fn fit_decay_rate(times: &[f64], values: &[f64], constant: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, &v)| (v - constant).abs() > 0.0)
        .map(|(&t, &v)| (t, (v - constant).abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}
