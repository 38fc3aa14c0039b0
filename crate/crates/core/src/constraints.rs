//! Universal constraints on relaxation rates and the measured-times witness.
//!
//! For any GKLS generator on a `d`-level system the rates satisfy
//!
//! ```text
//! ΣΓ ≥ (d/√2) Γ_α          (sum bound, every α)
//! Γ_α ≤ ½ ΣΓ               (half-sum bound, implied by the above for d ≥ 3)
//! Γ_k ≤ Γ_i + Γ_j          (qubit triangle relations, d = 2)
//! ```
//!
//! A set of rates violating any of these cannot come from a GKLS master
//! equation, which makes the checks usable as a witness against complete
//! positivity or Markovianity of measured dynamics.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_ext::{maybe_inf, vec_maybe_inf};
use crate::spectrum::RelaxationProfile;

/// Default relative tolerance for computed rates.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateSource {
    Computed,
    Measured,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateSet {
    d: usize,
    rates: Vec<f64>,
    source: RateSource,
}

impl RateSet {
    pub fn new(d: usize, rates: Vec<f64>, source: RateSource) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!("rate set needs d >= 2, got {d}")));
        }
        if rates.len() != d * d - 1 {
            return Err(Error::InvalidRates(format!("d = {d} needs {} rates, got {}", d * d - 1, rates.len())));
        }
        if let Some(&bad) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::InvalidRate(bad));
        }
        Ok(Self { d, rates, source })
    }

    pub fn from_profile(profile: &RelaxationProfile) -> Self {
        Self { d: profile.d, rates: profile.rates.clone(), source: RateSource::Computed }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn source(&self) -> RateSource {
        self.source
    }

    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// `d/√2`.
    pub fn bound_factor(&self) -> f64 {
        self.d as f64 / SQRT_2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Violated,
    /// All rates are zero; nothing to check.
    Indeterminate,
}

impl Verdict {
    fn from_margins(margins: &[f64], total: f64, tolerance: f64) -> Self {
        if total <= 0.0 {
            Verdict::Indeterminate
        } else if margins.iter().all(|&m| m >= -tolerance * total) {
            Verdict::Satisfied
        } else {
            Verdict::Violated
        }
    }

    pub fn is_violated(self) -> bool {
        self == Verdict::Violated
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryReport {
    /// `½ΣΓ - Γ_α`.
    pub margins: Vec<f64>,
    pub verdict: Verdict,
    pub pass: bool,
    /// The sum bound implies this one whenever `d/√2 ≥ 2`.
    pub implied_by_sum_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LongitudinalTransverse {
    pub longitudinal_index: usize,
    #[serde(serialize_with = "maybe_inf")]
    pub t_longitudinal: f64,
    #[serde(serialize_with = "maybe_inf")]
    pub t_transverse: f64,
    /// `2 T_L - T_T`.
    #[serde(serialize_with = "maybe_inf")]
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct QubitReport {
    /// `Γ_i + Γ_j - Γ_k` for `k = 0, 1, 2`.
    pub margins: [f64; 3],
    pub pass: bool,
    pub longitudinal_transverse: Option<LongitudinalTransverse>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstraintReport {
    pub d: usize,
    pub total_rate: f64,
    pub factor: f64,
    pub tolerance: f64,
    /// `ΣΓ - (d/√2) Γ_α`.
    pub margins: Vec<f64>,
    pub verdict: Verdict,
    pub pass: bool,
    /// `max_α (d/√2) Γ_α / ΣΓ`; at most 1 for GKLS rates.
    pub tightness: f64,
    pub corollary: CorollaryReport,
    pub qubit: Option<QubitReport>,
}

impl ConstraintReport {
    /// True when no checked inequality is violated.
    pub fn all_pass(&self) -> bool {
        self.pass && self.corollary.pass && self.qubit.as_ref().is_none_or(|q| q.pass)
    }
}

/// Checks `ΣΓ ≥ (d/√2) Γ_α` for every α with relative tolerance `tolerance`
/// (scaled by `ΣΓ`). Also runs the half-sum and, for qubits, the pairwise
/// relations.
pub fn check_main_theorem(r: &RateSet, tolerance: f64) -> ConstraintReport {
    let total = r.total();
    let factor = r.bound_factor();
    let margins: Vec<f64> = r.rates.iter().map(|&g| total - factor * g).collect();
    let verdict = Verdict::from_margins(&margins, total, tolerance);
    let tightness = if total > 0.0 { factor * r.rates.iter().copied().fold(0.0, f64::max) / total } else { 0.0 };
    let qubit = if r.d == 2 { check_qubit_relations(r, tolerance).ok() } else { None };
    ConstraintReport {
        d: r.d,
        total_rate: total,
        factor,
        tolerance,
        margins,
        verdict,
        pass: !verdict.is_violated(),
        tightness,
        corollary: check_corollary(r, tolerance),
        qubit,
    }
}

/// Checks `Γ_α ≤ ½ΣΓ` for every α.
pub fn check_corollary(r: &RateSet, tolerance: f64) -> CorollaryReport {
    let total = r.total();
    let margins: Vec<f64> = r.rates.iter().map(|&g| 0.5 * total - g).collect();
    let verdict = Verdict::from_margins(&margins, total, tolerance);
    CorollaryReport { margins, verdict, pass: !verdict.is_violated(), implied_by_sum_bound: r.bound_factor() >= 2.0 }
}

/// Pairwise qubit relations `Γ_k ≤ Γ_i + Γ_j`, plus `2 T_L ≥ T_T` when two
/// rates coincide within tolerance (those two are taken as transverse).
pub fn check_qubit_relations(r: &RateSet, tolerance: f64) -> Result<QubitReport> {
    if r.d != 2 {
        return Err(Error::InvalidDimension(format!("qubit relations need d = 2, got {}", r.d)));
    }
    let g = &r.rates;
    let total = r.total();
    let slack = tolerance * total;
    let margins = [g[1] + g[2] - g[0], g[0] + g[2] - g[1], g[0] + g[1] - g[2]];
    let pass = margins.iter().all(|&m| m >= -slack);

    let pair = [(0, 1, 2), (0, 2, 1), (1, 2, 0)]
        .into_iter()
        .map(|(i, j, l)| ((g[i] - g[j]).abs(), i, l))
        .filter(|&(gap, _, _)| gap <= slack)
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let longitudinal_transverse = pair.map(|(_, t, l)| {
        let (gamma_t, gamma_l) = (g[t], g[l]);
        let t_l = if gamma_l > 0.0 { 1.0 / gamma_l } else { f64::INFINITY };
        let t_t = if gamma_t > 0.0 { 1.0 / gamma_t } else { f64::INFINITY };
        let margin = if t_l.is_infinite() && t_t.is_infinite() { 0.0 } else { 2.0 * t_l - t_t };
        // Rate form of 2 T_L ≥ T_T: Γ_L ≤ 2 Γ_T.
        LongitudinalTransverse {
            longitudinal_index: l,
            t_longitudinal: t_l,
            t_transverse: t_t,
            margin,
            pass: 2.0 * gamma_t - gamma_l >= -slack,
        }
    });
    Ok(QubitReport { margins, pass, longitudinal_transverse })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum WitnessOutcome {
    Consistent,
    Inconsistent,
    /// Every time is infinite: no decay observed.
    Indeterminate,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub inequality: &'static str,
    pub index: usize,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessVerdict {
    pub d: usize,
    #[serde(serialize_with = "vec_maybe_inf")]
    pub times: Vec<f64>,
    pub rates: Vec<f64>,
    pub tolerance: f64,
    pub verdict: WitnessOutcome,
    pub violations: Vec<Violation>,
    pub report: ConstraintReport,
}

impl WitnessVerdict {
    pub fn is_consistent(&self) -> bool {
        self.verdict != WitnessOutcome::Inconsistent
    }
}

/// Tests a full set of `d² - 1` measured relaxation times (`+∞` allowed)
/// against every constraint. Times are treated as an unordered multiset.
pub fn witness_measured_times(times: &[f64], d: usize, tolerance: f64) -> Result<WitnessVerdict> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("witness needs d >= 2, got {d}")));
    }
    if times.len() != d * d - 1 {
        return Err(Error::InvalidRates(format!(
            "d = {d} needs all {} relaxation times, got {}",
            d * d - 1,
            times.len()
        )));
    }
    if let Some(bad) = times.iter().find(|&&t| t.is_nan() || t <= 0.0) {
        return Err(Error::InvalidRates(format!("relaxation times must be positive, got {bad}")));
    }
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::InvalidRates(format!("tolerance must be nonnegative, got {tolerance}")));
    }
    let rates: Vec<f64> = times.iter().map(|&t| if t.is_infinite() { 0.0 } else { 1.0 / t }).collect();
    let set = RateSet::new(d, rates.clone(), RateSource::Measured)?;
    let report = check_main_theorem(&set, tolerance);

    let slack = tolerance * set.total();
    let mut violations = Vec::new();
    let mut collect = |name: &'static str, margins: &[f64]| {
        for (index, &margin) in margins.iter().enumerate() {
            if margin < -slack {
                violations.push(Violation { inequality: name, index, margin });
            }
        }
    };
    collect("sum_bound", &report.margins);
    collect("half_sum_bound", &report.corollary.margins);
    if let Some(q) = &report.qubit {
        collect("qubit_triangle", &q.margins);
        if let Some(lt) = q.longitudinal_transverse.as_ref().filter(|lt| !lt.pass) {
            violations.push(Violation {
                inequality: "longitudinal_transverse",
                index: lt.longitudinal_index,
                margin: lt.margin,
            });
        }
    }

    let verdict = if !violations.is_empty() {
        WitnessOutcome::Inconsistent
    } else if report.verdict == Verdict::Indeterminate {
        WitnessOutcome::Indeterminate
    } else {
        WitnessOutcome::Consistent
    };
    Ok(WitnessVerdict { d, times: times.to_vec(), rates, tolerance, verdict, violations, report })
}

/// Euclidean projection of the rate vector onto the cone
/// `{Γ ≥ 0, (d/√2) Γ_α ≤ ΣΓ ∀α}`.
///
/// The cone is `{x : A x ≤ 0}`; its projection is `y - Aᵀλ*` where `λ*`
/// solves the nonnegative least-squares problem `min ‖y - Aᵀλ‖, λ ≥ 0`
/// (projection onto the polar cone), solved here by the Lawson-Hanson
/// active-set method.
pub fn nearest_consistent_rates(r: &RateSet) -> RateSet {
    let n = r.rates.len();
    let constraints = cone_constraints(n, r.bound_factor());
    let lambda = nnls(&constraints, &r.rates);
    let mut x = r.rates.clone();
    for (a, &l) in constraints.iter().zip(&lambda) {
        if l != 0.0 {
            for (xi, ai) in x.iter_mut().zip(a) {
                *xi -= l * ai;
            }
        }
    }
    for xi in &mut x {
        *xi = xi.max(0.0);
    }
    RateSet { d: r.d, rates: x, source: r.source }
}

/// Rows `a_i` with the cone written as `a_i · x ≤ 0`: first `-e_α`, then
/// `c e_α - 1`.
pub fn cone_constraints(n: usize, factor: f64) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(2 * n);
    for a in 0..n {
        let mut row = vec![0.0; n];
        row[a] = -1.0;
        rows.push(row);
    }
    for a in 0..n {
        let mut row = vec![-1.0; n];
        row[a] += factor;
        rows.push(row);
    }
    rows
}

/// Lawson-Hanson NNLS for `min ‖y - Σ_i λ_i a_i‖`, `λ ≥ 0`, with the `a_i`
/// given as rows.
fn nnls(columns: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let m = columns.len();
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-13 * scale * columns.iter().map(|c| dot(c, c).sqrt()).fold(0.0, f64::max).max(1.0);
    let mut lambda = vec![0.0; m];
    let mut passive = vec![false; m];

    let residual = |lambda: &[f64]| -> Vec<f64> {
        let mut r = y.to_vec();
        for (c, &l) in columns.iter().zip(lambda) {
            if l != 0.0 {
                for (ri, ci) in r.iter_mut().zip(c) {
                    *ri -= l * ci;
                }
            }
        }
        r
    };

    for _outer in 0..(3 * m + 10) {
        let res = residual(&lambda);
        let candidate =
            (0..m).filter(|&j| !passive[j]).map(|j| (j, dot(&columns[j], &res))).max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((t, w)) = candidate else { break };
        if w <= tol {
            break;
        }
        passive[t] = true;

        for _inner in 0..(3 * m + 10) {
            let set: Vec<usize> = (0..m).filter(|&j| passive[j]).collect();
            let Some(z_set) = least_squares(columns, &set, y) else {
                // Dependent column entered; back it out.
                passive[t] = false;
                break;
            };
            let mut z = vec![0.0; m];
            for (&j, &v) in set.iter().zip(&z_set) {
                z[j] = v;
            }
            if set.iter().all(|&j| z[j] > 0.0) {
                lambda = z;
                break;
            }
            let alpha = set
                .iter()
                .filter(|&&j| z[j] <= 0.0)
                .map(|&j| lambda[j] / (lambda[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            for j in 0..m {
                lambda[j] += alpha * (z[j] - lambda[j]);
            }
            for &j in &set {
                if lambda[j] <= 1e-15 * scale {
                    lambda[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    lambda
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least squares over the selected columns via the normal equations.
fn least_squares(columns: &[Vec<f64>], set: &[usize], y: &[f64]) -> Option<Vec<f64>> {
    let k = set.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (r, &i) in set.iter().enumerate() {
        for (c, &j) in set.iter().enumerate() {
            a[r][c] = dot(&columns[i], &columns[j]);
        }
        a[r][k] = dot(&columns[i], y);
    }
    gauss_solve(a)
}

/// Solves an augmented `k x (k+1)` system with partial pivoting.
pub(crate) fn gauss_solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let k = a.len();
    let scale = a.iter().flat_map(|r| r[..k].iter()).map(|v| v.abs()).fold(0.0, f64::max);
    for col in 0..k {
        let pivot = (col..k).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale.max(1e-300) {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..=k {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (a[row][k] - s) / a[row][row];
    }
    Some(x)
}
