//! `qplab`: iterate the q-P(n+1,n+1) map exactly and run verification suites.
//!
//! Exit codes: 0 on success, 1 on a failed check or an I/O error, 2 on a bad
//! configuration or when no usable sample could be drawn.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qplab_core::harness::DEFAULT_MAX_BITS;
use qplab_core::model::derive_seed;
use qplab_core::{run_orbit, run_suites, Error, Params, RelationReport, SampleOptions, Scalar, Snapshot, Suite, SuiteConfig, TRegime};
use serde::Serialize;

const MAX_BITS_VAR: &str = "QPLAB_MAX_BITS";
/// Fresh samples drawn by `run` after an orbit hits a singular step.
const RUN_RESAMPLES: u64 = 5;

#[derive(Parser)]
#[command(name = "qplab", version, about = "Exact orbits and identity checks for the q-P(n+1,n+1) system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a state and iterate the forward map.
    Run(RunArgs),
    /// Run verification suites on random samples.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 5)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trajectory JSON; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write `step,t,f_1..f_n,g_1..g_n,h` rows here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Regime::Generic)]
    t_regime: Regime,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated suites, or `all`.
    #[arg(long, value_delimiter = ',', required = true)]
    suite: Vec<String>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Truncation order of the hypergeometric series.
    #[arg(long, default_value_t = 20)]
    order: usize,
    /// Orbit length for the suites that iterate the map.
    #[arg(long, default_value_t = 8)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = Regime::Generic)]
    t_regime: Regime,
    /// JSON report; only the summary is printed if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Regime {
    Generic,
    QPower,
}

impl From<Regime> for TRegime {
    fn from(r: Regime) -> Self {
        match r {
            Regime::Generic => TRegime::Generic,
            Regime::QPower => TRegime::QPower,
        }
    }
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Check(String),
    Io(String),
    Config(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::Check(m) => (1, m),
            Failure::Io(m) => (1, format!("I/O error: {m}")),
            Failure::Config(m) => (2, m),
        };
        eprintln!("qplab: {msg}");
        ExitCode::from(code)
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn max_bits() -> Result<u64, Failure> {
    match std::env::var(MAX_BITS_VAR) {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(bits) if bits > 0 => Ok(bits),
            _ => Err(Failure::Config(format!("{MAX_BITS_VAR} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(DEFAULT_MAX_BITS),
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(io_err(path))?;
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Io(e.to_string()))?;
            writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
        }
        None => {
            let mut w = io::stdout().lock();
            serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Io(e.to_string()))?;
            writeln!(w).map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

#[derive(Serialize)]
struct StepRecord<'a> {
    step: usize,
    t: &'a Scalar,
    f: &'a [Scalar],
    g: &'a [Scalar],
    h: &'a Scalar,
}

#[derive(Serialize)]
struct BlowUp {
    seed: u64,
    step: usize,
    error: String,
}

#[derive(Serialize)]
struct Trajectory<'a> {
    seed: u64,
    params: &'a Params,
    steps: Vec<StepRecord<'a>>,
    /// Earlier samples whose orbits hit a singular step.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    blow_ups: Vec<BlowUp>,
}

fn write_csv(path: &Path, snaps: &[Snapshot]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let n = snaps[0].params.n();
    let mut header = vec!["step".to_string(), "t".to_string()];
    header.extend((1..=n).map(|i| format!("f{i}")));
    header.extend((1..=n).map(|i| format!("g{i}")));
    header.push("h".into());
    let csv_err = |e: csv::Error| Failure::Io(format!("{}: {e}", path.display()));
    w.write_record(&header).map_err(csv_err)?;
    for (k, s) in snaps.iter().enumerate() {
        let mut row = vec![k.to_string(), s.params.t().to_string()];
        row.extend(s.state.f.iter().map(Scalar::to_string));
        row.extend(s.state.g.iter().map(Scalar::to_string));
        row.push(s.state.h.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let limit = max_bits()?;
    let n = args.n as usize;
    let opts = SampleOptions {
        t_regime: args.t_regime.into(),
        ..SampleOptions::default()
    };
    let mut blow_ups = Vec::new();
    for attempt in 0..=RUN_RESAMPLES {
        let seed = if attempt == 0 { args.seed } else { derive_seed(args.seed, attempt, 0x52554E) };
        let start = Snapshot::sample(n, seed, &opts)
            .map_err(|e| Failure::Config(format!("could not sample a state for n = {n}: {e}")))?;
        let orbit = run_orbit(start, args.steps, limit);
        match orbit.stopped {
            Some((step, e @ Error::SingularStep { .. })) => {
                eprintln!("qplab: seed {seed}: blow-up at step {step}: {e}; resampling");
                blow_ups.push(BlowUp { seed, step, error: e.to_string() });
                continue;
            }
            Some((step, e)) => return Err(Failure::Check(format!("seed {seed}: step {step}: {e}"))),
            None => {}
        }
        let snaps = &orbit.snapshots;
        let traj = Trajectory {
            seed,
            params: &snaps[0].params,
            steps: snaps
                .iter()
                .enumerate()
                .map(|(step, s)| StepRecord {
                    step,
                    t: s.params.t(),
                    f: &s.state.f,
                    g: &s.state.g,
                    h: &s.state.h,
                })
                .collect(),
            blow_ups,
        };
        write_json(&traj, args.out.as_deref())?;
        if let Some(path) = &args.csv {
            write_csv(path, snaps)?;
        }
        return Ok(());
    }
    Err(Failure::Config(format!(
        "every orbit hit a singular step within {} steps after {} samples",
        args.steps,
        RUN_RESAMPLES + 1
    )))
}

#[derive(Serialize)]
struct VerifyConfig {
    n: usize,
    trials: usize,
    seed: u64,
    order: usize,
    steps: usize,
    t_regime: TRegime,
    max_bits: u64,
}

#[derive(Serialize)]
struct SuiteEntry {
    suite: Suite,
    #[serde(flatten)]
    report: RelationReport,
}

#[derive(Serialize)]
struct VerifyReport {
    config: VerifyConfig,
    passed: bool,
    relations: Vec<SuiteEntry>,
}

fn parse_suites(names: &[String]) -> Result<Vec<Suite>, Failure> {
    let mut suites = Vec::new();
    for name in names {
        let name = name.trim();
        if name == "all" {
            suites.extend(Suite::ALL);
        } else {
            suites.push(name.parse().map_err(|e: Error| Failure::Config(e.to_string()))?);
        }
    }
    let mut seen = Vec::new();
    suites.retain(|s| {
        let fresh = !seen.contains(s);
        seen.push(*s);
        fresh
    });
    if suites.is_empty() {
        return Err(Failure::Config("no suite selected".into()));
    }
    Ok(suites)
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let suites = parse_suites(&args.suite)?;
    let mut cfg = SuiteConfig::new(args.n as usize, args.trials as usize, args.seed);
    cfg.order = args.order;
    cfg.steps = args.steps;
    cfg.t_regime = args.t_regime.into();
    cfg.max_bits = max_bits()?;
    let results = run_suites(&suites, &cfg).map_err(|e| Failure::Config(e.to_string()))?;

    let mut checks_failed = 0;
    let mut sampling_failed = 0;
    for (suite, r) in &results {
        let sampling = r.sampling_failures();
        let real = r.failures.len() - sampling;
        checks_failed += real;
        sampling_failed += sampling;
        let status = if r.passed() { "ok" } else { "FAILED" };
        println!("{suite:<11} {:<48} {status}  ({} trials, {real} failed, {sampling} unsampled)", r.relation, r.trials);
    }
    let report = VerifyReport {
        config: VerifyConfig {
            n: cfg.n,
            trials: cfg.trials,
            seed: cfg.seed,
            order: cfg.order,
            steps: cfg.steps,
            t_regime: cfg.t_regime,
            max_bits: cfg.max_bits,
        },
        passed: checks_failed == 0 && sampling_failed == 0,
        relations: results
            .into_iter()
            .map(|(suite, report)| SuiteEntry { suite, report })
            .collect(),
    };
    if let Some(path) = &args.out {
        write_json(&report, Some(path))?;
    }
    if checks_failed > 0 {
        Err(Failure::Check(format!("{checks_failed} trial(s) failed")))
    } else if sampling_failed > 0 {
        Err(Failure::Config(format!("{sampling_failed} trial(s) found no nondegenerate sample")))
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
