//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::FRAC_1_SQRT_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use gkls_core::constraints::{check_corollary, check_qubit_relations, witness_measured_times, WitnessOutcome};
use gkls_core::ensemble::{run_ensemble_with, sample_rng, EnsembleStats, Execution};
use gkls_core::fixtures::{dephasing, pauli, plus_state};
use gkls_core::proofcheck::{check_proof, commutator_ratio};
use gkls_core::random::{gaussian_matrix, random_generator, random_state};
use gkls_core::spectrum::{generator_spectrum, multiset_distance};
use gkls_core::{
    check_main_theorem, evolve, expectation_series, relaxation_profile, DensityMatrix, EnsembleConfig, LinearMap,
    RateSet, TimeGrid, C64,
};

type Outcome = Result<String, String>;

const DIMS: [usize; 5] = [2, 3, 4, 5, 6];
const ENSEMBLE_SAMPLES: usize = 10_000;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ensembles() -> Result<Vec<EnsembleStats>, String> {
    DIMS.iter()
        .map(|&d| {
            let cfg = EnsembleConfig::new(d, ENSEMBLE_SAMPLES, 1000 + d as u64);
            run_ensemble_with(&cfg, Execution::Parallel).map_err(|e| format!("d={d}: {e}"))
        })
        .collect()
}

fn stress(stats: &[EnsembleStats]) -> Outcome {
    let mut worst: f64 = 0.0;
    for s in stats {
        ensure(s.numerical_failures.is_empty(), || {
            format!("d={}: {} numerical failures", s.config.d, s.numerical_failures.len())
        })?;
        ensure(s.count == ENSEMBLE_SAMPLES, || format!("d={}: {} samples", s.config.d, s.count))?;
        ensure(s.violation_count == 0, || format!("d={}: {} violations", s.config.d, s.violation_count))?;
        worst = worst.max(s.max_tightness);
    }
    Ok(format!("{} generators, max tightness {worst:.6}", stats.len() * ENSEMBLE_SAMPLES))
}

fn trace_identity(stats: &[EnsembleStats]) -> Outcome {
    let mut sum_err: f64 = 0.0;
    let mut gen_err: f64 = 0.0;
    for s in stats {
        let d = s.config.d;
        for r in &s.samples {
            ensure(r.trace_identity_error <= 1e-8, || {
                format!("d={d} #{}: rate sum error {:e}", r.index, r.trace_identity_error)
            })?;
            ensure(r.generator_trace_error <= 1e-10, || {
                format!("d={d} #{}: generator trace error {:e}", r.index, r.generator_trace_error)
            })?;
        }
        ensure(s.trace_identity_failures == 0 && s.generator_trace_failures == 0, || {
            format!("d={d}: flagged failures")
        })?;
        sum_err = sum_err.max(s.max_trace_identity_error);
        gen_err = gen_err.max(s.max_generator_trace_error);
    }
    Ok(format!("max rel errors {sum_err:.1e} (rate sum), {gen_err:.1e} (generator trace)"))
}

fn spectral_structure(stats: &[EnsembleStats]) -> Outcome {
    let mut pairing: f64 = 0.0;
    let mut max_re = f64::NEG_INFINITY;
    for s in stats {
        let d = s.config.d;
        ensure(s.structure_failures == 0, || format!("d={d}: {} structure failures", s.structure_failures))?;
        for r in &s.samples {
            ensure(r.structure_pass, || format!("d={d} #{}: structure check failed", r.index))?;
            ensure(r.pairing_distance <= 1e-8, || format!("d={d} #{}: pairing {:e}", r.index, r.pairing_distance))?;
            max_re = max_re.max(r.max_real_part);
        }
        pairing = pairing.max(s.max_pairing_distance);
    }
    Ok(format!("max pairing distance {pairing:.1e}, max Re(nonzero) {max_re:.3e}"))
}

fn dephasing_closed_form() -> Outcome {
    let g = dephasing(1.0);
    let spec = generator_spectrum(&g).map_err(|e| e.to_string())?;
    let zero = C64::new(0.0, 0.0);
    let minus = C64::new(-1.0, 0.0);
    let dist = multiset_distance(spec.eigenvalues(), &[zero, zero, minus, minus]);
    ensure(dist < 1e-12, || format!("spectrum distance {dist:e}"))?;

    let profile = relaxation_profile(&spec);
    let rate_err = profile.rates.iter().zip([1.0, 1.0, 0.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(rate_err < 1e-12, || format!("rates {:?}", profile.rates))?;

    let rates = RateSet::from_profile(&profile);
    let qubit = check_qubit_relations(&rates, 1e-9).map_err(|e| e.to_string())?;
    ensure(qubit.pass && qubit.margins[..2].iter().all(|m| m.abs() < 1e-12), || {
        format!("triangle margins {:?}", qubit.margins)
    })?;
    let corollary = check_corollary(&rates, 1e-9);
    ensure(corollary.pass && corollary.margins[..2].iter().all(|m| m.abs() < 1e-12), || {
        format!("half-sum margins {:?}", corollary.margins)
    })?;
    let report = check_main_theorem(&rates, 1e-9);
    ensure(report.pass && (report.tightness - FRAC_1_SQRT_2).abs() < 1e-12, || {
        format!("tightness {}", report.tightness)
    })?;

    let rho = DensityMatrix::new(plus_state()).map_err(|e| e.to_string())?;
    let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).map_err(|e| e.to_string())?;
    let traj = evolve(&g, &rho, &grid).map_err(|e| e.to_string())?;
    let mut traj_err: f64 = 0.0;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        traj_err = traj_err.max((s[(0, 1)] - C64::new(0.5 * (-t).exp(), 0.0)).norm());
    }
    ensure(traj_err < 1e-9, || format!("coherence error {traj_err:e}"))?;
    Ok(format!("R = {:.15}, coherence error {traj_err:.1e}", report.tightness))
}

fn proof_steps() -> Outcome {
    let mut residual: f64 = 0.0;
    let mut steps = 0usize;
    for d in 2..=4 {
        for i in 0..1000u64 {
            let g = random_generator(&mut sample_rng(5000 + d as u64, i), d, 1.0, None, 1.0);
            let spec = generator_spectrum(&g).map_err(|e| format!("d={d} #{i}: {e}"))?;
            let report = check_proof(&g, &spec).map_err(|e| format!("d={d} #{i}: {e}"))?;
            ensure(report.max_identity_residual < 1e-8, || {
                format!("d={d} #{i}: identity residual {:e}", report.max_identity_residual)
            })?;
            if let Some(bad) = report.steps.iter().find(|s| !s.pass) {
                return Err(format!(
                    "d={d} #{i}: step {} mode {:?} lhs {} rhs {}",
                    bad.step, bad.mode, bad.lhs, bad.rhs
                ));
            }
            residual = residual.max(report.max_identity_residual);
            steps += report.steps.len();
        }
    }

    let mut worst: f64 = 0.0;
    let pairs_per_dim = 100_000 / DIMS.len();
    for &d in &DIMS {
        let mut rng = sample_rng(7000 + d as u64, 0);
        for _ in 0..pairs_per_dim {
            let a = gaussian_matrix(&mut rng, d, d);
            let b = gaussian_matrix(&mut rng, d, d);
            worst = worst.max(commutator_ratio(&a, &b));
        }
    }
    ensure(worst <= 1.0 + 1e-12, || format!("commutator ratio {worst}"))?;
    Ok(format!("{steps} chain steps, identity residual {residual:.1e}, commutator ratio max {worst:.6}"))
}

fn gkls() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gkls"));
    cmd.env("SOURCE_DATE_EPOCH", "0");
    cmd
}

fn witness_exit(d: usize, times: &str) -> Result<i32, String> {
    let out = gkls()
        .args(["--quiet", "witness", "--d", &d.to_string(), "--times", times])
        .output()
        .map_err(|e| e.to_string())?;
    out.status.code().ok_or_else(|| "terminated by signal".into())
}

fn witness() -> Outcome {
    let sat = witness_measured_times(&[1.0, 2.0, 2.0], 2, 1e-9).map_err(|e| e.to_string())?;
    ensure(sat.verdict == WitnessOutcome::Consistent, || format!("(1,2,2): {:?}", sat.verdict))?;
    let lt = sat.report.qubit.as_ref().and_then(|q| q.longitudinal_transverse.as_ref()).ok_or("(1,2,2): no pairing")?;
    ensure(lt.pass && lt.margin.abs() < 1e-12, || format!("(1,2,2): 2T_L - T_T margin {}", lt.margin))?;

    let bad = witness_measured_times(&[0.1, 2.0, 2.0], 2, 1e-9).map_err(|e| e.to_string())?;
    ensure(bad.verdict == WitnessOutcome::Inconsistent, || format!("(0.1,2,2): {:?}", bad.verdict))?;
    let cites = |name: &str| bad.violations.iter().any(|v| v.inequality == name);
    ensure(cites("sum_bound") && cites("qubit_triangle"), || format!("(0.1,2,2): violations {:?}", bad.violations))?;

    let flat = witness_measured_times(&[3.0; 8], 3, 1e-9).map_err(|e| e.to_string())?;
    ensure(flat.verdict == WitnessOutcome::Consistent, || format!("8 x 3.0: {:?}", flat.verdict))?;

    let codes = [witness_exit(2, "1,2,2")?, witness_exit(2, "0.1,2,2")?, witness_exit(3, "3,3,3,3,3,3,3,3")?];
    ensure(codes == [0, 1, 0], || format!("exit codes {codes:?}"))?;
    Ok(format!("verdicts ok, exit codes {codes:?}"))
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for &d in &DIMS {
        for i in 0..100u64 {
            let mut rng = sample_rng(9000 + d as u64, i);
            let g = random_generator(&mut rng, d, 1.0, None, 1.0);
            let rho = random_state(&mut rng, d);
            let direct = g.apply_generator(&rho).map_err(|e| e.to_string())?;
            let lifted = g.to_superoperator().apply(&rho).map_err(|e| e.to_string())?;
            let err = direct.max_abs_diff(&lifted) / direct.max_abs().max(1.0);
            ensure(err <= 1e-10, || format!("d={d} #{i}: superoperator mismatch {err:e}"))?;
            worst = worst.max(err);
        }
    }

    let mut recon: f64 = 0.0;
    let grid = TimeGrid::uniform(5.0, 51).map_err(|e| e.to_string())?;
    for &d in &DIMS {
        for i in 0..10u64 {
            let mut rng = sample_rng(9500 + d as u64, i);
            let g = random_generator(&mut rng, d, 1.0, None, 1.0);
            let rho = DensityMatrix::new(random_state(&mut rng, d)).map_err(|e| e.to_string())?;
            let obs = random_state(&mut rng, d);
            let series = expectation_series(&g, &rho, &obs, &grid).map_err(|e| e.to_string())?;
            let dec = series.decomposition.as_ref().ok_or_else(|| format!("d={d} #{i}: defective spectrum"))?;
            ensure(dec.reconstruction_error <= 1e-7, || {
                format!("d={d} #{i}: reconstruction error {:e}", dec.reconstruction_error)
            })?;
            recon = recon.max(dec.reconstruction_error);
        }
    }
    // Dephasing observable with a known single mode.
    let g = dephasing(1.0);
    let rho = DensityMatrix::new(plus_state()).map_err(|e| e.to_string())?;
    let series = expectation_series(&g, &rho, &pauli('x'), &grid).map_err(|e| e.to_string())?;
    for (t, v) in series.times.iter().zip(&series.values) {
        ensure((v - (-t).exp()).abs() < 1e-9, || format!("<sigma_x>({t}) = {v}"))?;
    }
    Ok(format!("superoperator error {worst:.1e}, reconstruction error {recon:.1e}"))
}

fn reproducibility() -> Outcome {
    for d in [2, 4] {
        let cfg = EnsembleConfig::new(d, 2000, 42);
        let serial = run_ensemble_with(&cfg, Execution::Serial).map_err(|e| e.to_string())?;
        let parallel = run_ensemble_with(&cfg, Execution::Parallel).map_err(|e| e.to_string())?;
        let a = serde_json::to_vec(&serial).map_err(|e| e.to_string())?;
        let b = serde_json::to_vec(&parallel).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("d={d}: serial and parallel statistics differ"))?;
    }

    let run = |extra: &[&str]| -> Result<Vec<u8>, String> {
        let mut args = vec!["--quiet", "sample", "--d", "3", "--n", "500", "--seed", "7"];
        args.extend_from_slice(extra);
        let out = gkls().args(&args).output().map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("sample exited {:?}", out.status.code()))?;
        Ok(out.stdout)
    };
    let parallel = run(&[])?;
    let serial = run(&["--serial"])?;
    let again = run(&[])?;
    ensure(parallel == serial, || "CLI serial and parallel output differ".into())?;
    ensure(parallel == again, || "CLI reruns differ".into())?;
    Ok(format!("core and CLI output byte-identical ({} bytes)", parallel.len()))
}

fn report(label: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS  {label}: {detail} [{secs:.1}s]");
            true
        }
        Err(detail) => {
            println!("FAIL  {label}: {detail} [{secs:.1}s]");
            false
        }
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let stats = ensembles();
    println!("ensembles: d = 2..6, {ENSEMBLE_SAMPLES} each [{:.1}s]", start.elapsed().as_secs_f64());
    let shared = |f: fn(&[EnsembleStats]) -> Outcome| {
        let stats = &stats;
        move || stats.as_ref().map_err(Clone::clone).and_then(|s| f(s))
    };

    let results = [
        report("1 rate bound stress test", shared(stress)),
        report("2 trace identity", shared(trace_identity)),
        report("3 spectral structure", shared(spectral_structure)),
        report("4 dephasing closed form", dephasing_closed_form),
        report("5 proof-step suite", proof_steps),
        report("6 witness verdicts", witness),
        report("7 oracle equivalence", oracle_equivalence),
        report("8 reproducibility", reproducibility),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
