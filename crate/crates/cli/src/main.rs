//! `quench-lab`: runs one experiment, writes its CSV tables and a JSON
//! manifest, and reports through the exit code (0 ok, 1 invalid config or
//! failed run, 2 an inequality was violated).

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::*;
use output::{write_manifest, Manifest, Versions};

const EXIT_INVALID: u8 = 1;
const EXIT_VIOLATION: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "quench-lab", version, about = "Transverse-field Ising quench laboratory")]
struct Cli {
    /// TOML file with shared keys and one table per subcommand; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Block entropy S_L(t) from the exact correlation matrix.
    EntropyCurve(EntropyCurveFlags),
    /// Entropy-growth bound and its proof chain over a time grid.
    VerifyTheorem(VerifyTheoremFlags),
    /// Bessel-sum inequalities on their grids.
    BesselCheck(BesselCheckFlags),
    /// Correlation-matrix path against the exact state vector.
    OracleCompare(OracleCompareFlags),
    /// MPS time evolution with truncation.
    TebdRun(TebdRunFlags),
    /// Closed-form bond-dimension and entropy bounds, plus sampled
    /// continuity checks.
    BoundsTable(BoundsTableFlags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::EntropyCurve(_) => "entropy-curve",
            Command::VerifyTheorem(_) => "verify-theorem",
            Command::BesselCheck(_) => "bessel-check",
            Command::OracleCompare(_) => "oracle-compare",
            Command::TebdRun(_) => "tebd-run",
            Command::BoundsTable(_) => "bounds-table",
        }
    }
}

struct Shared {
    output_dir: PathBuf,
    seed: u64,
}

fn execute<P: Serialize>(
    name: &str,
    params: &P,
    shared: &Shared,
    run: impl FnOnce(&P, &Path) -> Result<commands::Report, String>,
) -> ExitCode {
    let started_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    if let Err(e) = std::fs::create_dir_all(&shared.output_dir) {
        eprintln!("error: cannot create {}: {e}", shared.output_dir.display());
        return ExitCode::from(EXIT_INVALID);
    }
    let report = match run(params, &shared.output_dir) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {name} failed: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let exit_code = if report.violations > 0 { EXIT_VIOLATION } else { 0 };
    let manifest = Manifest {
        command: name,
        versions: Versions {
            cli: env!("CARGO_PKG_VERSION"),
            core: quench_core::VERSION,
        },
        params,
        seed: shared.seed,
        threads: rayon::current_num_threads(),
        output_dir: shared.output_dir.display().to_string(),
        outputs: report.outputs.clone(),
        summary: report.summary.clone(),
        violations: report.violations,
        exit_code,
        started_unix_s,
        wall_clock_s: clock.elapsed().as_secs_f64(),
    };
    let manifest_name = format!("{}.manifest.json", name.replace('-', "_"));
    if let Err(e) = write_manifest(&shared.output_dir.join(&manifest_name), &manifest) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INVALID);
    }
    // a closed stdout must not turn a finished run into a failure
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{name}: {}", report.summary);
    for f in report.outputs.iter().chain(std::iter::once(&manifest_name)) {
        let _ = writeln!(out, "wrote {}", shared.output_dir.join(f).display());
    }
    if report.violations > 0 {
        eprintln!("{name}: {} row(s) flagged as violations", report.violations);
    }
    ExitCode::from(exit_code)
}

fn main() -> ExitCode {
    // clap's own usage-error status (2) would read as a violation
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    let file = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: invalid config: {e}");
                return ExitCode::from(EXIT_INVALID);
            }
        },
        None => FileConfig::default(),
    };
    let threads = cli.threads.or(file.threads);
    if threads == Some(0) {
        eprintln!("error: invalid config: threads must be positive");
        return ExitCode::from(EXIT_INVALID);
    }
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    }
    let shared = Shared {
        output_dir: cli
            .output_dir
            .or(file.output_dir)
            .unwrap_or_else(|| PathBuf::from("quench-out")),
        seed: cli.seed.or(file.seed).unwrap_or(1),
    };
    let name = cli.command.name();
    let invalid = |e: ConfigError| {
        eprintln!("error: invalid config for {name}: {e}");
        ExitCode::from(EXIT_INVALID)
    };
    match &cli.command {
        Command::EntropyCurve(f) => match EntropyCurve::resolve(file.entropy_curve, f) {
            Ok(p) => execute(name, &p, &shared, commands::entropy_curve),
            Err(e) => invalid(e),
        },
        Command::VerifyTheorem(f) => match VerifyTheorem::resolve(file.verify_theorem, f) {
            Ok(p) => execute(name, &p, &shared, commands::verify_theorem),
            Err(e) => invalid(e),
        },
        Command::BesselCheck(f) => match BesselCheck::resolve(file.bessel_check, f) {
            Ok(p) => execute(name, &p, &shared, commands::bessel_check),
            Err(e) => invalid(e),
        },
        Command::OracleCompare(f) => match OracleCompare::resolve(file.oracle_compare, f) {
            Ok(p) => execute(name, &p, &shared, commands::oracle_compare),
            Err(e) => invalid(e),
        },
        Command::TebdRun(f) => match TebdRun::resolve(file.tebd_run, f) {
            Ok(p) => execute(name, &p, &shared, commands::tebd_run),
            Err(e) => invalid(e),
        },
        Command::BoundsTable(f) => match BoundsTable::resolve(file.bounds_table, f) {
            Ok(p) => {
                let seed = shared.seed;
                execute(name, &p, &shared, |p, dir| commands::bounds_table(p, seed, dir))
            }
            Err(e) => invalid(e),
        },
    }
}
