use clap::{Parser, Subcommand, ValueEnum};
use gsp_persistence::bounds::{assemble_upper_bound_with, Q_GRID};
use gsp_persistence::persistence::{decay_fit_with, hole_crude_mc, hole_sequential, read_estimates_csv, write_estimates_csv, Regressor};
use gsp_persistence::sampler::{sample_cholesky, sample_spectral, SampleGrid};
use gsp_persistence::verify::{run_suite, Suite, Tolerances};
use gsp_persistence::{DualDomain, Error, SpectralMeasure};
use serde_json::json;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gsp",
    version,
    about = "Gap probabilities of Gaussian stationary processes given by spectral measures",
    after_help = "Exit codes: 0 success, 1 failed check or computation error, 2 usage or input error.\n\
                  Tolerances used by `verify` can be overridden with GSP_TOL_SIGMA, GSP_TOL_REL and GSP_TOL_ABS."
)]
struct Cli {
    /// Cap on worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a process spec and report mass, moments and origin regularity.
    Spectrum {
        spec: PathBuf,
        /// Half-widths of the origin window to scan (default: π/2^i, i = 0..5).
        #[arg(long = "a", num_args = 1..)]
        windows: Vec<f64>,
    },
    /// Estimate ln H(N) on a grid, one CSV row per N.
    Estimate {
        spec: PathBuf,
        #[arg(long = "N", num_args = 1.., required = true)]
        lengths: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = EstimateKind::Sequential)]
        method: EstimateKind,
        /// Constant added to the process before testing positivity.
        #[arg(long, default_value_t = 0.0)]
        shift: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample paths on the grid of [0, length) and dump them as CSV.
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        length: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, default_value_t = 100)]
        paths: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SimulateKind::Cholesky)]
        method: SimulateKind,
        /// Number of frequencies for the spectral method.
        #[arg(long, default_value_t = 1024)]
        modes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble the upper-bound exponent and its intermediate constants.
    Bounds {
        spec: PathBuf,
        #[arg(long = "a")]
        a: f64,
        #[arg(long = "m")]
        m: f64,
        #[arg(long = "M")]
        upper: f64,
        /// Thresholds q to optimise over.
        #[arg(long = "q", num_args = 1..)]
        thresholds: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run self-check suites; exits 1 if any check fails.
    Verify {
        #[arg(long = "suite", value_enum, num_args = 1.., default_values_t = vec![SuiteArg::All])]
        suites: Vec<SuiteArg>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, env = "GSP_TOL_SIGMA", default_value_t = 3.0)]
        tol_sigma: f64,
        #[arg(long, env = "GSP_TOL_REL", default_value_t = 1e-6)]
        tol_rel: f64,
        #[arg(long, env = "GSP_TOL_ABS", default_value_t = 1e-12)]
        tol_abs: f64,
    },
    /// Fit the decay rate of ln H(N) from an estimate CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = RegressorArg::Linear)]
        regressor: RegressorArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimateKind {
    Sequential,
    Crude,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimulateKind {
    Cholesky,
    Spectral,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SuiteArg {
    All,
    LatticeIid,
    Ordering,
    Fejer,
    Split,
    LowerFactorization,
    SmallBall,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegressorArg {
    Linear,
    NLogN,
}

enum Failure {
    Check,
    Input(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidMeasure(_)
            | Error::InvalidArgument(_)
            | Error::OutsideDomain { .. }
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Io(_)
            | Error::OutOfRange(_)
            | Error::InsufficientPoints { .. }
            | Error::Hypothesis(_)
            | Error::GridTooLarge { .. }
            | Error::LatticeMisaligned { .. } => Failure::Input(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(spec: &Path) -> Result<SpectralMeasure, Failure> {
    let text = std::fs::read_to_string(spec).map_err(|e| Failure::Input(format!("{}: {e}", spec.display())))?;
    SpectralMeasure::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", spec.display())))
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(out: &Option<PathBuf>, value: &serde_json::Value) -> Result<(), Failure> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Spectrum { spec, windows } => spectrum(&spec, windows),
        Command::Estimate { spec, lengths, step, draws, seed, method, shift, out } => {
            let rho = load(&spec)?;
            let mut rows = Vec::with_capacity(lengths.len());
            for n in lengths {
                rows.push(match method {
                    EstimateKind::Sequential => hole_sequential(&rho, n, step, shift, draws, seed)?,
                    EstimateKind::Crude => {
                        if shift != 0.0 {
                            return Err(Failure::Input("--shift is only supported by the sequential method".into()));
                        }
                        hole_crude_mc(&rho, n, step, draws, seed)?
                    }
                });
            }
            let mut w = sink(&out)?;
            write_estimates_csv(&rows, &mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::Simulate { spec, length, step, paths, seed, method, modes, out } => {
            let rho = load(&spec)?;
            let grid = SampleGrid::half_open(length, step)?
                .ok_or_else(|| Failure::Input("the grid on [0, length) is empty".into()))?;
            let ens = match method {
                SimulateKind::Cholesky => sample_cholesky(&rho, grid, paths, seed)?,
                SimulateKind::Spectral => sample_spectral(&rho, grid, modes, paths, seed)?,
            };
            let mut w = sink(&out)?;
            ens.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::Bounds { spec, a, m, upper, thresholds, out } => {
            let rho = load(&spec)?;
            let grid = if thresholds.is_empty() { Q_GRID.to_vec() } else { thresholds };
            let report = assemble_upper_bound_with(&rho, a, m, upper, &grid)?;
            let mut value = serde_json::to_value(&report).map_err(Error::from)?;
            value["config"] = json!({ "spec": spec.display().to_string(), "a": a, "m": m, "M": upper, "q_grid": grid });
            write_json(&out, &value)
        }
        Command::Verify { suites, seed, tol_sigma, tol_rel, tol_abs } => {
            let tol = Tolerances { sigma: tol_sigma, relative: tol_rel, absolute: tol_abs };
            let selected: Vec<Suite> = if suites.contains(&SuiteArg::All) {
                Suite::ALL.to_vec()
            } else {
                suites.iter().map(|s| to_suite(*s)).collect()
            };
            let mut all_passed = true;
            for suite in selected {
                let outcome = run_suite(suite, seed, tol)?;
                let verdict = if outcome.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {} ({} checks, seed {seed})", outcome.suite, outcome.checks);
                for f in &outcome.failures {
                    println!("  {f}");
                }
                all_passed &= outcome.passed;
            }
            if all_passed {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
        Command::Fit { input, regressor, out } => {
            let file = File::open(&input).map_err(|e| Failure::Input(format!("{}: {e}", input.display())))?;
            let estimates = read_estimates_csv(file)?;
            let regressor = match regressor {
                RegressorArg::Linear => Regressor::Linear,
                RegressorArg::NLogN => Regressor::NLogN,
            };
            let fit = decay_fit_with(&estimates, regressor)?;
            let value = serde_json::to_value(&fit).map_err(Error::from)?;
            write_json(&out, &value)
        }
    }
}

fn to_suite(s: SuiteArg) -> Suite {
    match s {
        SuiteArg::LatticeIid | SuiteArg::All => Suite::LatticeIid,
        SuiteArg::Ordering => Suite::Ordering,
        SuiteArg::Fejer => Suite::Fejer,
        SuiteArg::Split => Suite::Split,
        SuiteArg::LowerFactorization => Suite::LowerFactorization,
        SuiteArg::SmallBall => Suite::SmallBall,
    }
}

fn spectrum(spec: &Path, windows: Vec<f64>) -> Result<(), Failure> {
    let rho = load(spec)?;
    let windows = if windows.is_empty() {
        (0..6).map(|i| PI / f64::from(1u32 << i)).collect()
    } else {
        windows
    };
    let mut scan = Vec::new();
    let mut best: Option<(f64, f64, f64)> = None;
    for &a in &windows {
        let reg = rho.verify_origin_regularity(a)?;
        if reg.m > 0.0 && best.is_none_or(|(_, m, _)| reg.m > m) {
            best = Some((a, reg.m, reg.upper));
        }
        scan.push(serde_json::to_value(reg).map_err(Error::from)?);
    }
    let lower = best.is_some();
    let upper = best.is_some_and(|(_, _, up)| up.is_finite());
    let verdict = match best {
        Some((a, m, up)) if up.is_finite() => {
            format!("upper and lower exponential bounds apply: m = {m}, M = {up} on (-{a}, {a})")
        }
        Some((a, m, _)) => format!(
            "lower exponential bound applies (m = {m} on (-{a}, {a})); upper bound fails: M = inf (atom near the origin)"
        ),
        None => "lower and upper exponential bounds fail: m = 0 at the origin".to_string(),
    };
    let moment = |d: f64| rho.moment(d).map(|v| if v.is_finite() { json!(v) } else { json!("inf") });
    let report = json!({
        "spec": spec.display().to_string(),
        "domain": match rho.domain() { DualDomain::IntegerTime => "integer", DualDomain::RealTime => "real" },
        "total_mass": rho.total_mass(),
        "moments": { "0.5": moment(0.5)?, "1": moment(1.0)? },
        "origin_regularity": scan,
        "upper_bound_applies": upper,
        "lower_bound_applies": lower,
        "verdict": verdict,
    });
    write_json(&None, &report)
}
