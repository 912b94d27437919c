//! `saddlelab` command-line front end: parses experiment parameters,
//! dispatches the analysis routines and writes manifest-tracked result
//! directories.
//!
//! Exit status: 0 when every asserted bound holds, 2 on a violated bound or
//! assumption (or a failed integration), 1 on usage, configuration or I/O
//! errors. Every nonzero exit prints one line to stderr of the form
//! `saddlelab: error kind=<kind> exit=<code> message=<json string>`.

pub mod config;
pub mod function_spec;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use saddlelab_core::CatalogEntry;
use thiserror::Error;

pub use config::{Experiment, Params};
pub use function_spec::{parse_function_spec, SpecError};
pub use run::{run, RunManifest, RunOutcome};

pub const THREADS_ENV: &str = "SADDLELAB_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "saddlelab", version, about = "GD and NGD saddle-escape experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct ExperimentArgs {
    /// Flat JSON config file whose keys are the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: Params,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one GD/NGD trajectory (or run a discrete iteration).
    Simulate(ExperimentArgs),
    /// NGD occupancy of B_r around a critical point versus C·√κ·r.
    EscapeSweep(ExperimentArgs),
    /// GD time spent near a saddle before entering B_eps.
    GdStall(ExperimentArgs),
    /// Compare the arc-length reparametrized GD orbit with NGD.
    CompareOrbits(ExperimentArgs),
    /// Fraction of random initial conditions whose NGD flow ends at a saddle.
    StableManifold(ExperimentArgs),
    /// Sample the second-order Taylor estimates around a critical point.
    TaylorCheck(ExperimentArgs),
    /// Global NGD convergence time versus the global bound.
    GlobalBound(ExperimentArgs),
    /// List the built-in catalog functions.
    ListFunctions,
}

fn diagnostic(kind: &str, code: i32, message: &str) {
    let message = serde_json::to_string(message).expect("strings serialize");
    eprintln!("saddlelab: error kind={kind} exit={code} message={message}");
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool may already exist when running in-process more than once.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn list_functions() {
    for entry in CatalogEntry::defaults() {
        println!("{}  (d = {})", entry.name, entry.function.dim());
        for (p, class) in &entry.known_critical_points {
            let coords: Vec<String> = p.iter().map(|x| format!("{x:.6}")).collect();
            println!("    ({})  {class:?}", coords.join(", "));
        }
    }
    println!();
    println!("grammar: quadratic:diag:<l1,...> | quadratic:dense:<a11,a12,...> |");
    println!("         cubic-perturbed:<l1,...>:<beta> | trig-multiwell:<d>");
}

fn dispatch(args: Vec<OsString>) -> Result<i32, CliError> {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(0);
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return Err(CliError::Usage(first.to_string()));
        }
    };
    configure_threads()?;
    let (experiment, args) = match cli.command {
        Command::ListFunctions => {
            list_functions();
            return Ok(0);
        }
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::EscapeSweep(a) => (Experiment::EscapeSweep, a),
        Command::GdStall(a) => (Experiment::GdStall, a),
        Command::CompareOrbits(a) => (Experiment::CompareOrbits, a),
        Command::StableManifold(a) => (Experiment::StableManifold, a),
        Command::TaylorCheck(a) => (Experiment::TaylorCheck, a),
        Command::GlobalBound(a) => (Experiment::GlobalBound, a),
    };
    let params = match &args.config {
        Some(path) => Params::from_file(path, experiment)?.overridden_by(&args.params),
        None => args.params,
    };
    let outcome = run(experiment, &params)?;
    println!("{}", outcome.dir.display());
    for v in &outcome.manifest.verdicts {
        println!(
            "{}: {}{}",
            v.name,
            if v.pass { "pass" } else { "fail" },
            if v.asserted { "" } else { " (informational)" }
        );
    }
    if outcome.passed() {
        return Ok(0);
    }
    let message = match &outcome.violation {
        Some(e) => e.to_string(),
        None => "an asserted bound failed".to_string(),
    };
    let kind = match &outcome.violation {
        Some(saddlelab_core::analysis::AnalysisError::AssumptionViolated { .. }) => "assumption_violated",
        Some(saddlelab_core::analysis::AnalysisError::BoundViolated { .. }) | None => "bound_violated",
        Some(_) => "experiment_failed",
    };
    diagnostic(kind, 2, &message);
    Ok(2)
}

/// Runs the command line `args` (including the program name) and returns
/// the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    match dispatch(args.into_iter().map(Into::into).collect()) {
        Ok(code) => code,
        Err(e) => {
            diagnostic(e.kind(), 1, &e.to_string());
            1
        }
    }
}
