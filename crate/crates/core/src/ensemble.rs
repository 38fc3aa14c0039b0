//! Seeded random GKLS generators, tightness statistics, and a hill-climbing
//! search for generators that come close to saturating the rate bound.
//!
//! Sample `i` of a run with seed `s` draws from ChaCha20 keyed by `s` on
//! stream `i`, so every sample is reproducible on its own and serial and
//! parallel runs produce identical statistics.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{build_gellmann_basis, OperatorBasis};
use crate::constraints::{check_main_theorem, ConstraintReport, RateSet, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::generator::{dissipation_strength, GKLSGenerator};
use crate::matrix::{ComplexMatrix, C64};
use crate::random::{gaussian_matrix, generator_factors, generator_from_factors, gue};
use crate::spectrum::{generator_spectrum, relaxation_profile, verify_spectral_structure};

/// Identifies the sampler in output metadata.
pub const RNG_NAME: &str = "ChaCha20Rng (rand_chacha 0.9), key = seed_from_u64(seed), stream = sample index";

/// Stream used by [`saturation_search`]; disjoint from any sample index in practice.
const SEARCH_STREAM: u64 = u64::MAX;

pub const HISTOGRAM_BINS: usize = 20;
pub const TRACE_IDENTITY_TOLERANCE: f64 = 1e-8;
pub const GENERATOR_TRACE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub d: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub hamiltonian_scale: f64,
    /// Columns of the Gaussian factor of `C`; `None` means full rank.
    pub kossakowski_rank: Option<usize>,
    pub kossakowski_scale: f64,
    /// Replace sample 0 by pure dephasing at `kossakowski_scale`.
    #[serde(default)]
    pub include_dephasing: bool,
    /// Relative tolerance of the rate check.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl EnsembleConfig {
    pub fn new(d: usize, n_samples: usize, seed: u64) -> Self {
        Self {
            d,
            n_samples,
            seed,
            hamiltonian_scale: 1.0,
            kossakowski_rank: None,
            kossakowski_scale: 1.0,
            include_dephasing: false,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidDimension(format!("ensemble needs d >= 2, got {}", self.d)));
        }
        let n = self.d * self.d - 1;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1".into());
        }
        if !(self.hamiltonian_scale.is_finite() && self.hamiltonian_scale >= 0.0) {
            return bad(format!("hamiltonian_scale must be finite and >= 0, got {}", self.hamiltonian_scale));
        }
        if !(self.kossakowski_scale.is_finite() && self.kossakowski_scale > 0.0) {
            return bad(format!("kossakowski_scale must be finite and > 0, got {}", self.kossakowski_scale));
        }
        if let Some(r) = self.kossakowski_rank {
            if r == 0 || r > n {
                return bad(format!("kossakowski_rank must be in 1..={n}, got {r}"));
            }
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return bad(format!("tolerance must be finite and >= 0, got {}", self.tolerance));
        }
        Ok(())
    }

    fn rank(&self) -> usize {
        self.kossakowski_rank.unwrap_or(self.d * self.d - 1)
    }
}

/// The generator for `(seed, index)` is a pure function of the pair.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `(H, G)` for one sample, with `C = scale · G G† / (d² - 1)`.
fn sample_factors(cfg: &EnsembleConfig, index: u64) -> (ComplexMatrix, ComplexMatrix) {
    let n = cfg.d * cfg.d - 1;
    if cfg.include_dephasing && index == 0 {
        let mut g = ComplexMatrix::zeros(n, cfg.rank());
        g[(n - 1, 0)] = C64::new((n as f64).sqrt(), 0.0);
        return (ComplexMatrix::zeros(cfg.d, cfg.d), g);
    }
    let mut rng = sample_rng(cfg.seed, index);
    generator_factors(&mut rng, cfg.d, cfg.hamiltonian_scale, cfg.kossakowski_rank)
}

pub fn sample_generator(cfg: &EnsembleConfig, index: u64) -> Result<GKLSGenerator> {
    cfg.validate()?;
    let basis = Arc::new(build_gellmann_basis(cfg.d)?);
    sample_with_basis(cfg, index, basis)
}

fn sample_with_basis(cfg: &EnsembleConfig, index: u64, basis: Arc<OperatorBasis>) -> Result<GKLSGenerator> {
    let (h, g) = sample_factors(cfg, index);
    generator_from_factors(h, &g, cfg.kossakowski_scale, basis)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Serial,
    Parallel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRecord {
    pub index: u64,
    pub tightness: f64,
    pub total_rate: f64,
    pub max_rate: f64,
    /// `|ΣΓ - d Tr C| / (d Tr C)`.
    pub trace_identity_error: f64,
    /// `|Tr M + d Tr C| / (d Tr C)`.
    pub generator_trace_error: f64,
    pub pairing_distance: f64,
    pub max_real_part: f64,
    pub structure_pass: bool,
    pub bound_pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ViolationRecord {
    pub index: u64,
    pub report: ConstraintReport,
    pub generator: GKLSGenerator,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleFailure {
    pub index: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins on `[0, 1]`; values above 1 land in the last bin.
    fn of_tightness(values: impl Iterator<Item = f64>) -> Self {
        let edges = (0..=HISTOGRAM_BINS).map(|k| k as f64 / HISTOGRAM_BINS as f64).collect();
        let mut counts = vec![0; HISTOGRAM_BINS];
        for r in values {
            let bin = ((r.max(0.0) * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            counts[bin] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleStats {
    pub config: EnsembleConfig,
    pub rng: &'static str,
    pub count: usize,
    pub max_tightness: f64,
    pub argmax_index: u64,
    pub argmax_generator: GKLSGenerator,
    pub histogram: Histogram,
    pub violation_count: usize,
    pub violations: Vec<ViolationRecord>,
    pub trace_identity_failures: usize,
    pub generator_trace_failures: usize,
    pub structure_failures: usize,
    pub max_trace_identity_error: f64,
    pub max_generator_trace_error: f64,
    pub max_pairing_distance: f64,
    pub numerical_failures: Vec<SampleFailure>,
    pub samples: Vec<SampleRecord>,
}

impl EnsembleStats {
    /// No rate violations, no identity or structure failures, no numerical failures.
    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
            && self.trace_identity_failures == 0
            && self.generator_trace_failures == 0
            && self.structure_failures == 0
            && self.numerical_failures.is_empty()
    }
}

fn relative(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

fn evaluate(
    cfg: &EnsembleConfig,
    index: u64,
    basis: &Arc<OperatorBasis>,
) -> Result<(SampleRecord, Option<ViolationRecord>)> {
    let g = sample_with_basis(cfg, index, basis.clone())?;
    let spec = generator_spectrum(&g)?;
    let profile = relaxation_profile(&spec);
    let rates = RateSet::from_profile(&profile);
    let report = check_main_theorem(&rates, cfg.tolerance);
    let structure = verify_spectral_structure(&spec);
    let d_trace = cfg.d as f64 * dissipation_strength(&g);
    let record = SampleRecord {
        index,
        tightness: report.tightness,
        total_rate: profile.total_rate(),
        max_rate: profile.max_rate(),
        trace_identity_error: relative((profile.total_rate() - d_trace).abs(), d_trace),
        generator_trace_error: relative((spec.superoperator_trace().re + d_trace).abs(), d_trace),
        pairing_distance: structure.pairing_distance,
        max_real_part: structure.max_real_part,
        structure_pass: structure.pass,
        bound_pass: report.pass,
    };
    let violation = (!report.pass).then_some(ViolationRecord { index, report, generator: g });
    Ok((record, violation))
}

pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleStats> {
    run_ensemble_with(cfg, Execution::Parallel)
}

/// Samples, diagnoses and aggregates `cfg.n_samples` generators. The result
/// does not depend on `execution`.
pub fn run_ensemble_with(cfg: &EnsembleConfig, execution: Execution) -> Result<EnsembleStats> {
    cfg.validate()?;
    let basis = Arc::new(build_gellmann_basis(cfg.d)?);
    let n = cfg.n_samples as u64;
    let outcomes: Vec<_> = match execution {
        Execution::Serial => (0..n).map(|i| (i, evaluate(cfg, i, &basis))).collect(),
        Execution::Parallel => (0..n).into_par_iter().map(|i| (i, evaluate(cfg, i, &basis))).collect(),
    };

    let mut samples = Vec::with_capacity(outcomes.len());
    let mut violations = Vec::new();
    let mut numerical_failures = Vec::new();
    for (index, outcome) in outcomes {
        match outcome {
            Ok((record, violation)) => {
                samples.push(record);
                violations.extend(violation);
            }
            Err(e) => numerical_failures.push(SampleFailure { index, error: e.to_string() }),
        }
    }

    // Ties in R resolve to the lowest index.
    let argmax = samples
        .iter()
        .fold(None::<&SampleRecord>, |best, s| match best {
            Some(b) if b.tightness >= s.tightness => Some(b),
            _ => Some(s),
        })
        .map(|s| (s.index, s.tightness));
    let (argmax_index, max_tightness) = argmax.unwrap_or((0, 0.0));
    let argmax_generator = sample_with_basis(cfg, argmax_index, basis)?;

    let fold_max = |f: fn(&SampleRecord) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(EnsembleStats {
        config: cfg.clone(),
        rng: RNG_NAME,
        count: samples.len(),
        max_tightness,
        argmax_index,
        argmax_generator,
        histogram: Histogram::of_tightness(samples.iter().map(|s| s.tightness)),
        violation_count: violations.len(),
        violations,
        trace_identity_failures: samples
            .iter()
            .filter(|s| !(s.trace_identity_error <= TRACE_IDENTITY_TOLERANCE))
            .count(),
        generator_trace_failures: samples
            .iter()
            .filter(|s| !(s.generator_trace_error <= GENERATOR_TRACE_TOLERANCE))
            .count(),
        structure_failures: samples.iter().filter(|s| !s.structure_pass).count(),
        max_trace_identity_error: fold_max(|s| s.trace_identity_error),
        max_generator_trace_error: fold_max(|s| s.generator_trace_error),
        max_pairing_distance: fold_max(|s| s.pairing_distance),
        numerical_failures,
        samples,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SaturationResult {
    pub tightness: f64,
    pub generator: GKLSGenerator,
    pub report: ConstraintReport,
    pub iterations: usize,
    pub accepted: usize,
    pub restarts: usize,
}

/// Rejections in a row that trigger a restart from a fresh random sample.
const STALL_LIMIT: usize = 2000;
const INITIAL_STEP: f64 = 0.1;

fn tightness_of(
    h: &ComplexMatrix,
    g: &ComplexMatrix,
    cfg: &EnsembleConfig,
    basis: &Arc<OperatorBasis>,
) -> Result<(f64, GKLSGenerator, ConstraintReport)> {
    let gen = generator_from_factors(h.clone(), g, cfg.kossakowski_scale, basis.clone())?;
    let spec = generator_spectrum(&gen)?;
    let report = check_main_theorem(&RateSet::from_profile(&relaxation_profile(&spec)), cfg.tolerance);
    Ok((report.tightness, gen, report))
}

/// Accept-if-better local ascent of the tightness ratio over `(H, G)`,
/// starting from sample 0 of `cfg`. `C` stays PSD because only its Gaussian
/// factor is perturbed. The step shrinks by 0.99 per 100 consecutive
/// rejections; after [`STALL_LIMIT`] rejections the walk restarts.
pub fn saturation_search(cfg: &EnsembleConfig, iterations: usize) -> Result<SaturationResult> {
    cfg.validate()?;
    let basis = Arc::new(build_gellmann_basis(cfg.d)?);
    let (mut h, mut g) = sample_factors(cfg, 0);
    let (mut current, gen, report) = tightness_of(&h, &g, cfg, &basis)?;
    let mut best =
        SaturationResult { tightness: current, generator: gen, report, iterations, accepted: 0, restarts: 0 };

    let mut rng = sample_rng(cfg.seed, SEARCH_STREAM);
    let (d, n, rank) = (cfg.d, cfg.d * cfg.d - 1, cfg.rank());
    let mut step = INITIAL_STEP;
    let mut rejections = 0;
    for _ in 0..iterations {
        let dh = gue(&mut rng, d, step * cfg.hamiltonian_scale);
        let dg = gaussian_matrix(&mut rng, n, rank).scale_real(step);
        let h2 = &h + &dh;
        let g2 = &g + &dg;
        match tightness_of(&h2, &g2, cfg, &basis) {
            Ok((r, gen, report)) if r > current => {
                h = h2;
                g = g2;
                current = r;
                rejections = 0;
                best.accepted += 1;
                if r > best.tightness {
                    best.tightness = r;
                    best.generator = gen;
                    best.report = report;
                }
            }
            _ => {
                rejections += 1;
                if rejections % 100 == 0 {
                    step *= 0.99;
                }
                if rejections >= STALL_LIMIT {
                    h = gue(&mut rng, d, cfg.hamiltonian_scale);
                    g = gaussian_matrix(&mut rng, n, rank);
                    current = tightness_of(&h, &g, cfg, &basis).map(|t| t.0).unwrap_or(0.0);
                    step = INITIAL_STEP;
                    rejections = 0;
                    best.restarts += 1;
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn samples_are_deterministic() {
        let cfg = EnsembleConfig::new(3, 4, 99);
        let a = serde_json::to_string(&sample_generator(&cfg, 2).unwrap()).unwrap();
        let b = serde_json::to_string(&sample_generator(&cfg, 2).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&sample_generator(&cfg, 3).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rank_one_gives_single_jump_operator() {
        let mut cfg = EnsembleConfig::new(2, 1, 1);
        cfg.kossakowski_rank = Some(1);
        for i in 0..5 {
            let g = sample_generator(&cfg, i).unwrap();
            let tol = g.kossakowski().tolerance();
            let count = g.decompose_lindblad().unwrap().weights().filter(|&p| p > tol).count();
            assert_eq!(count, 1);
        }
    }

    #[test]
    fn zero_hamiltonian_scale() {
        let mut cfg = EnsembleConfig::new(3, 1, 1);
        cfg.hamiltonian_scale = 0.0;
        let g = sample_generator(&cfg, 0).unwrap();
        assert_eq!(g.hamiltonian().as_matrix(), &ComplexMatrix::zeros(3, 3));
    }

    #[test]
    fn config_validation() {
        let mut cfg = EnsembleConfig::new(2, 0, 1);
        assert!(cfg.validate().is_err());
        cfg.n_samples = 1;
        cfg.kossakowski_rank = Some(4);
        assert!(cfg.validate().is_err());
        cfg.kossakowski_rank = Some(3);
        cfg.kossakowski_scale = 0.0;
        assert!(cfg.validate().is_err());
        cfg.kossakowski_scale = 1.0;
        assert!(cfg.validate().is_ok());
        assert!(EnsembleConfig::new(1, 1, 1).validate().is_err());
    }

    #[test]
    fn small_ensemble_is_clean_and_order_independent() {
        let cfg = EnsembleConfig::new(3, 40, 7);
        let serial = run_ensemble_with(&cfg, Execution::Serial).unwrap();
        let parallel = run_ensemble_with(&cfg, Execution::Parallel).unwrap();
        assert!(serial.is_clean());
        assert!(serial.max_tightness <= 1.0 && serial.max_tightness > 0.0);
        assert_eq!(serial.histogram.counts.iter().sum::<usize>(), 40);
        assert_eq!(serde_json::to_string(&serial).unwrap(), serde_json::to_string(&parallel).unwrap());
    }

    #[test]
    fn dephasing_special_sample_sets_the_floor() {
        let mut cfg = EnsembleConfig::new(2, 50, 3);
        cfg.kossakowski_rank = Some(1);
        cfg.include_dephasing = true;
        let g = sample_generator(&cfg, 0).unwrap();
        assert!((g.kossakowski().as_matrix()[(2, 2)].re - 1.0).abs() < 1e-15);
        let stats = run_ensemble(&cfg).unwrap();
        assert!((stats.samples[0].tightness - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(stats.max_tightness >= FRAC_1_SQRT_2 - 1e-12);
        assert!(stats.max_tightness <= 1.0);
    }

    #[test]
    fn search_with_zero_iterations_returns_seed() {
        let mut cfg = EnsembleConfig::new(2, 1, 5);
        cfg.include_dephasing = true;
        cfg.kossakowski_rank = Some(1);
        let res = saturation_search(&cfg, 0).unwrap();
        assert!((res.tightness - FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(res.accepted, 0);
        let seed = sample_generator(&cfg, 0).unwrap();
        assert_eq!(serde_json::to_string(&res.generator).unwrap(), serde_json::to_string(&seed).unwrap());
    }

    #[test]
    fn search_never_exceeds_bound() {
        let mut cfg = EnsembleConfig::new(2, 1, 5);
        cfg.include_dephasing = true;
        cfg.kossakowski_rank = Some(1);
        let res = saturation_search(&cfg, 300).unwrap();
        assert!(res.tightness >= FRAC_1_SQRT_2 - 1e-12 && res.tightness <= 1.0 + 1e-9);
        assert!(res.report.pass);
    }
}
