//! `gkls`: build, diagnose, and sample GKLS generators from the command line.
//!
//! Exit codes: 0 success, 1 a checked constraint failed (including a
//! Kossakowski matrix that is not positive semidefinite), 2 bad input,
//! 3 numerical failure.

mod manifest;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use gkls_core::constraints::{self, DEFAULT_TOLERANCE};
use gkls_core::dynamics::{self, DensityMatrix, TimeGrid};
use gkls_core::ensemble::{self, EnsembleConfig, Execution, RNG_NAME};
use gkls_core::proofcheck;
use gkls_core::serde_ext::{parse_time, MaybeInf};
use gkls_core::spectrum::{self, SpectrumReport, SpectrumTolerances};
use gkls_core::{ComplexMatrix, Error, GKLSGenerator, RateSet, C64};

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "gkls", version, about = "GKLS generators, spectra, and relaxation-rate constraints")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize)]
struct Global {
    /// Relative tolerance of the rate inequalities (scaled by the rate sum).
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    output: Format,
    /// Suppress the summary line on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Write to this file (atomically) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Zero-mode tolerance relative to max(1, ‖M‖_F).
    #[arg(long, global = true, default_value_t = 1e-9)]
    zero_rel: f64,
    /// Conjugate-pairing tolerance relative to max(1, spectral radius).
    #[arg(long, global = true, default_value_t = 1e-8)]
    pair_rel: f64,
    /// Eigenvector condition number above which a spectrum counts as defective.
    #[arg(long, global = true, default_value_t = 1e12)]
    kappa_max: f64,
}

impl Global {
    fn spectrum_tolerances(&self) -> SpectrumTolerances {
        SpectrumTolerances {
            zero_rel: self.zero_rel,
            pair_rel: self.pair_rel,
            kappa_max: self.kappa_max,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a generator file and print its canonical (H, C) form.
    Build { input: PathBuf },
    /// Eigenvalues, relaxation rates and times of a generator.
    Spectrum { input: PathBuf },
    /// Check a generator's rates against the universal constraints.
    Check { input: PathBuf },
    /// Test measured relaxation times for consistency with any GKLS generator.
    Witness(WitnessArgs),
    /// Sample random generators and collect tightness statistics.
    Sample(SampleArgs),
    /// Evolve a state and report physicality diagnostics.
    Evolve(EvolveArgs),
    /// Check every step of the rate bound's derivation on a generator.
    Proofcheck(ProofcheckArgs),
}

#[derive(Args, Serialize)]
struct WitnessArgs {
    #[arg(long)]
    d: usize,
    /// Comma-separated relaxation times; `inf` for non-decaying modes.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    times: Option<Vec<String>>,
    /// JSON array of relaxation times (numbers, "inf" or null).
    #[arg(long, conflicts_with = "times")]
    times_file: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    hamiltonian_scale: f64,
    /// Rank of the Kossakowski matrix; full rank when omitted.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    kossakowski_scale: f64,
    /// Make sample 0 pure dephasing.
    #[arg(long)]
    include_dephasing: bool,
    /// Run on one thread; output is identical either way, so the flag is
    /// left out of the manifest.
    #[arg(long)]
    #[serde(skip)]
    serial: bool,
    /// Print the generator of this sample index instead of statistics.
    #[arg(long, conflicts_with = "search")]
    emit_generator: Option<u64>,
    /// Run a saturation search with this many iterations instead.
    #[arg(long)]
    search: Option<usize>,
}

#[derive(Args, Serialize)]
struct EvolveArgs {
    input: PathBuf,
    /// Initial state: a matrix JSON file, or `ground`, `mixed`, `plus`.
    #[arg(long, default_value = "ground")]
    state: String,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    n_points: Option<usize>,
    /// Grid JSON: {"t_max": .., "n_points": ..} or an array of times.
    #[arg(long, conflicts_with_all = ["t_max", "n_points"])]
    grid: Option<PathBuf>,
    /// Hermitian observable (matrix JSON) whose expectation is decomposed.
    #[arg(long)]
    observable: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ProofcheckArgs {
    input: PathBuf,
    /// Also test the commutator inequality on this many random matrix pairs.
    #[arg(long, default_value_t = 0)]
    commutator_pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Core(Error),
    Input(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::NotCompletelyPositive { .. }) => 1,
            Failure::Core(e) if e.is_input_error() => 2,
            Failure::Core(_) => 3,
            Failure::Input(_) => 2,
            Failure::Io(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Input(m) | Failure::Io(m) => m.clone(),
        }
    }
}

type CmdResult = Result<Report, Failure>;

struct Report {
    manifest: RunManifest,
    result: Value,
    /// `(header, rows)` when the command has a flat tabular form.
    table: Option<(Vec<String>, Vec<Vec<String>>)>,
    summary: String,
    violated: bool,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn read_input(path: &Path, manifest: &mut RunManifest) -> Result<String, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    manifest.record_input(path, &bytes);
    String::from_utf8(bytes).map_err(|_| Failure::Input(format!("{} is not UTF-8", path.display())))
}

fn load_generator(path: &Path, manifest: &mut RunManifest) -> Result<GKLSGenerator, Failure> {
    Ok(GKLSGenerator::from_json(&read_input(path, manifest)?)?)
}

fn load_matrix(path: &Path, manifest: &mut RunManifest) -> Result<ComplexMatrix, Failure> {
    let text = read_input(path, manifest)?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_build(g: &Global, input: &Path) -> CmdResult {
    let mut manifest = RunManifest::new("build", json!({ "input": input, "global": g }));
    let gen = load_generator(input, &mut manifest)?;
    let trace_c = gen.kossakowski().trace();
    Ok(Report {
        manifest,
        result: json!({
            "d": gen.dim(),
            "trace_c": trace_c,
            "min_eigenvalue_c": gen.kossakowski().min_eigenvalue(),
            "generator": to_value(&gen),
        }),
        table: None,
        summary: format!("d = {}, Tr C = {trace_c}", gen.dim()),
        violated: false,
    })
}

fn cmd_spectrum(g: &Global, input: &Path) -> CmdResult {
    let mut manifest = RunManifest::new("spectrum", json!({ "input": input, "global": g }));
    let gen = load_generator(input, &mut manifest)?;
    let spec = spectrum::compute_spectrum_with(&gen.to_superoperator(), g.spectrum_tolerances())?;
    let profile = spectrum::relaxation_profile(&spec);
    let structure = spectrum::verify_spectral_structure(&spec);
    let rows = profile
        .rates
        .iter()
        .zip(&profile.times)
        .zip(&profile.frequencies)
        .map(|((r, t), w)| vec![num(*r), num(*t), num(*w)])
        .collect();
    Ok(Report {
        manifest,
        summary: format!(
            "{} modes, ΣΓ = {}, Γ_max = {}{}",
            spec.eigenvalues().len(),
            profile.total_rate(),
            profile.max_rate(),
            if spec.is_defective() { ", defective" } else { "" }
        ),
        result: json!({
            "spectrum": to_value(&SpectrumReport::new(&spec, &profile)),
            "condition_estimate": MaybeInf(spec.condition_estimate()),
            "structure": to_value(&structure),
        }),
        table: Some((vec!["rate".into(), "time".into(), "frequency".into()], rows)),
        violated: false,
    })
}

/// Shortest round-trip form, with `inf`/`-inf`/`nan` spelled out.
fn num(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite floats serialize")
    } else {
        x.to_string()
    }
}

fn cmd_check(g: &Global, input: &Path) -> CmdResult {
    let mut manifest = RunManifest::new("check", json!({ "input": input, "global": g }));
    let gen = load_generator(input, &mut manifest)?;
    let spec = spectrum::compute_spectrum_with(&gen.to_superoperator(), g.spectrum_tolerances())?;
    let profile = spectrum::relaxation_profile(&spec);
    let rates = RateSet::from_profile(&profile);
    let report = constraints::check_main_theorem(&rates, g.tolerance);
    let violated = !report.all_pass();
    Ok(Report {
        manifest,
        summary: format!(
            "{:?}, tightness R = {}, min margin = {}",
            report.verdict,
            report.tightness,
            report.margins.iter().copied().fold(f64::INFINITY, f64::min)
        ),
        result: json!({ "rates": to_value(&profile), "report": to_value(&report) }),
        table: None,
        violated,
    })
}

fn cmd_witness(g: &Global, args: &WitnessArgs) -> CmdResult {
    let mut manifest = RunManifest::new("witness", json!({ "args": args, "global": g }));
    let times: Vec<f64> = match (&args.times, &args.times_file) {
        (Some(list), None) => list
            .iter()
            .map(|s| parse_time(s).ok_or_else(|| Failure::Input(format!("not a relaxation time: {s:?}"))))
            .collect::<Result<_, _>>()?,
        (None, Some(path)) => {
            let text = read_input(path, &mut manifest)?;
            let parsed: Vec<MaybeInf> =
                serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            parsed.into_iter().map(|m| m.0).collect()
        }
        _ => return Err(Failure::Input("give --times or --times-file".into())),
    };
    let verdict = constraints::witness_measured_times(&times, args.d, g.tolerance)?;
    let nearest = (!verdict.is_consistent())
        .then(|| {
            RateSet::new(args.d, verdict.rates.clone(), constraints::RateSource::Measured)
                .map(|r| constraints::nearest_consistent_rates(&r))
        })
        .transpose()?;
    let mut summary = format!("{:?}", verdict.verdict).to_uppercase();
    for v in &verdict.violations {
        let _ = write!(summary, "; {} violated at index {} (margin {})", v.inequality, v.index, v.margin);
    }
    Ok(Report {
        manifest,
        summary,
        violated: !verdict.is_consistent(),
        result: json!({ "witness": to_value(&verdict), "nearest_consistent_rates": nearest.map(|r| r.rates().to_vec()) }),
        table: None,
    })
}

fn cmd_sample(g: &Global, args: &SampleArgs) -> CmdResult {
    let mut manifest = RunManifest::new("sample", json!({ "args": args, "global": g }));
    manifest.rng = Some(RNG_NAME);
    let cfg = EnsembleConfig {
        d: args.d,
        n_samples: args.n,
        seed: args.seed,
        hamiltonian_scale: args.hamiltonian_scale,
        kossakowski_rank: args.rank,
        kossakowski_scale: args.kossakowski_scale,
        include_dephasing: args.include_dephasing,
        tolerance: g.tolerance,
    };
    cfg.validate()?;

    if let Some(index) = args.emit_generator {
        let gen = ensemble::sample_generator(&cfg, index)?;
        return Ok(Report {
            manifest,
            summary: format!("sample {index} of seed {}", cfg.seed),
            result: json!({ "index": index, "generator": to_value(&gen) }),
            table: None,
            violated: false,
        });
    }
    if let Some(iterations) = args.search {
        let found = ensemble::saturation_search(&cfg, iterations)?;
        return Ok(Report {
            manifest,
            summary: format!(
                "best tightness R = {} after {iterations} iterations ({} accepted, {} restarts)",
                found.tightness, found.accepted, found.restarts
            ),
            violated: !found.report.pass,
            result: to_value(&found),
            table: None,
        });
    }

    let execution = if args.serial { Execution::Serial } else { Execution::Parallel };
    let stats = ensemble::run_ensemble_with(&cfg, execution)?;
    let rows = stats
        .samples
        .iter()
        .map(|s| vec![s.index.to_string(), num(s.tightness), num(s.total_rate), num(s.max_rate)])
        .collect();
    Ok(Report {
        manifest,
        summary: format!(
            "{} samples, max R = {} (sample {}), {} violations",
            stats.count, stats.max_tightness, stats.argmax_index, stats.violation_count
        ),
        violated: stats.violation_count > 0,
        table: Some((vec!["index".into(), "tightness".into(), "total_rate".into(), "max_rate".into()], rows)),
        result: to_value(&stats),
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridFile {
    Uniform { t_max: f64, n_points: usize },
    Times(Vec<f64>),
}

fn initial_state(spec: &str, d: usize, manifest: &mut RunManifest) -> Result<DensityMatrix, Failure> {
    let state = match spec {
        "ground" => {
            let mut psi = vec![C64::new(0.0, 0.0); d];
            psi[0] = C64::new(1.0, 0.0);
            DensityMatrix::pure(&psi)?
        }
        "mixed" => DensityMatrix::maximally_mixed(d),
        "plus" => DensityMatrix::pure(&vec![C64::new(1.0, 0.0); d])?,
        path => DensityMatrix::new(load_matrix(Path::new(path), manifest)?)?,
    };
    if state.dim() != d {
        return Err(Failure::Core(Error::DimensionMismatch(format!(
            "state is {0}x{0}, generator has d = {d}",
            state.dim()
        ))));
    }
    Ok(state)
}

fn cmd_evolve(g: &Global, args: &EvolveArgs) -> CmdResult {
    let mut manifest = RunManifest::new("evolve", json!({ "args": args, "global": g }));
    let gen = load_generator(&args.input, &mut manifest)?;
    let d = gen.dim();
    let rho0 = initial_state(&args.state, d, &mut manifest)?;
    let grid = match &args.grid {
        Some(path) => {
            let text = read_input(path, &mut manifest)?;
            match serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))? {
                GridFile::Uniform { t_max, n_points } => TimeGrid::uniform(t_max, n_points)?,
                GridFile::Times(times) => TimeGrid::new(times)?,
            }
        }
        None => TimeGrid::uniform(args.t_max.unwrap_or(1.0), args.n_points.unwrap_or(11))?,
    };
    let traj = dynamics::evolve(&gen, &rho0, &grid)?;
    let physicality = dynamics::physicality_report(&traj);
    let series = match &args.observable {
        Some(path) => Some(dynamics::expectation_series(&gen, &rho0, &load_matrix(path, &mut manifest)?, &grid)?),
        None => None,
    };

    let mut header = vec!["t".to_string()];
    for i in 0..d {
        for j in 0..d {
            header.push(format!("rho_{i}{j}_re"));
            header.push(format!("rho_{i}{j}_im"));
        }
    }
    header.extend(["trace_error", "hermiticity_error", "min_eigenvalue"].map(String::from));
    if series.is_some() {
        header.push("expectation".into());
    }
    let rows = (0..traj.times.len())
        .map(|k| {
            let mut row = vec![num(traj.times[k])];
            let rho = &traj.states[k];
            for i in 0..d {
                for j in 0..d {
                    row.push(num(rho[(i, j)].re));
                    row.push(num(rho[(i, j)].im));
                }
            }
            let diag = &traj.diagnostics[k];
            row.extend([diag.trace_error, diag.hermiticity_error, diag.min_eigenvalue].map(num));
            if let Some(s) = &series {
                row.push(num(s.values[k]));
            }
            row
        })
        .collect();
    Ok(Report {
        manifest,
        summary: format!(
            "{} snapshots, max trace error {:e}, min eigenvalue {:e}{}",
            traj.times.len(),
            physicality.max_trace_error,
            physicality.min_eigenvalue,
            if physicality.pass { "" } else { ", NOT PHYSICAL" }
        ),
        violated: !physicality.pass,
        result: json!({
            "trajectory": to_value(&traj),
            "physicality": to_value(&physicality),
            "expectation": series.as_ref().map(to_value),
        }),
        table: Some((header, rows)),
    })
}

fn cmd_proofcheck(g: &Global, args: &ProofcheckArgs) -> CmdResult {
    let mut manifest = RunManifest::new("proofcheck", json!({ "args": args, "global": g }));
    let gen = load_generator(&args.input, &mut manifest)?;
    let spec = spectrum::compute_spectrum_with(&gen.to_superoperator(), g.spectrum_tolerances())?;
    let report = proofcheck::check_proof(&gen, &spec)?;
    let mut pass = report.pass;
    let mut pairs = Value::Null;
    if args.commutator_pairs > 0 {
        manifest.rng = Some(RNG_NAME);
        let mut rng = ensemble::sample_rng(args.seed, 0);
        let d = gen.dim();
        let mut max_ratio: f64 = 0.0;
        let mut failures = 0usize;
        for _ in 0..args.commutator_pairs {
            let a = gkls_core::random::gaussian_matrix(&mut rng, d, d);
            let b = gkls_core::random::gaussian_matrix(&mut rng, d, d);
            let step = proofcheck::check_bw_inequality(&a, &b)?;
            failures += usize::from(!step.pass);
            max_ratio = max_ratio.max(proofcheck::commutator_ratio(&a, &b));
        }
        pass &= failures == 0;
        pairs = json!({ "pairs": args.commutator_pairs, "max_ratio": max_ratio, "failures": failures });
    }
    let rows = report
        .steps
        .iter()
        .map(|s| {
            vec![
                s.step.to_string(),
                s.mode.map_or(String::new(), |m| m.to_string()),
                num(s.lhs),
                num(s.rhs),
                num(s.slack),
                s.pass.to_string(),
            ]
        })
        .collect();
    Ok(Report {
        manifest,
        summary: format!(
            "{} steps, {} failed, max identity residual {:e}",
            report.steps.len(),
            report.steps.iter().filter(|s| !s.pass).count(),
            report.max_identity_residual
        ),
        violated: !pass,
        result: json!({ "proof": to_value(&report), "commutator_pairs": pairs }),
        table: Some((["step", "mode", "lhs", "rhs", "slack", "pass"].map(String::from).to_vec(), rows)),
    })
}

fn render(report: &Report, format: Format, command: &str) -> Result<String, Failure> {
    match format {
        Format::Json => {
            let doc = json!({ "manifest": to_value(&report.manifest), "result": report.result });
            Ok(serde_json::to_string_pretty(&doc).expect("JSON values serialize") + "\n")
        }
        Format::Csv => {
            let (header, rows) =
                report.table.as_ref().ok_or_else(|| Failure::Input(format!("`{command}` has no CSV form")))?;
            let mut out = String::new();
            let manifest = serde_json::to_string(&report.manifest).expect("manifest serializes");
            let _ = writeln!(out, "# manifest: {manifest}");
            let _ = writeln!(out, "{}", header.join(","));
            for row in rows {
                let _ = writeln!(out, "{}", row.join(","));
            }
            Ok(out)
        }
    }
}

/// Writes via a temporary file in the target directory, then renames, so a
/// failed run never leaves partial output.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |e: std::io::Error| Failure::Io(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let g = &cli.global;
    let (name, report) = match &cli.command {
        Command::Build { input } => ("build", cmd_build(g, input)?),
        Command::Spectrum { input } => ("spectrum", cmd_spectrum(g, input)?),
        Command::Check { input } => ("check", cmd_check(g, input)?),
        Command::Witness(args) => ("witness", cmd_witness(g, args)?),
        Command::Sample(args) => ("sample", cmd_sample(g, args)?),
        Command::Evolve(args) => ("evolve", cmd_evolve(g, args)?),
        Command::Proofcheck(args) => ("proofcheck", cmd_proofcheck(g, args)?),
    };
    let text = render(&report, g.output, name)?;
    match &g.out {
        Some(path) => write_atomic(path, &text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Io(format!("cannot write output: {e}")))?;
        }
    }
    if !g.quiet {
        eprintln!("{name}: {}", report.summary);
    }
    Ok(report.violated)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !(cli.global.tolerance.is_finite() && cli.global.tolerance >= 0.0) {
        eprintln!("error: --tolerance must be finite and >= 0");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
