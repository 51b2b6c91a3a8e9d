use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use cohesive_cli::report::{build_report, report_path};
use cohesive_cli::{
    cmd_check, cmd_cohomology, cmd_regularize, cmd_solve, cmd_transfer, read_instance, write_report, CliError,
    Outcome, Profile, Status, EXIT_OK, EXIT_TOLERANCE,
};

#[derive(Parser)]
#[command(name = "cohesive", version, about = "Deformation computations on cohesive-module instance files")]
struct Cli {
    #[command(subcommand)]
    command: Verb,
    /// Directory for report files (default: beside each input).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Process all inputs concurrently, one worker per file.
    #[arg(long, global = true)]
    batch: bool,
    #[arg(long, global = true, value_enum, default_value_t = ProfileArg::Default)]
    tolerance_profile: ProfileArg,
    /// Record wall-clock time in the report (outside the stability hash).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Default,
    Strict,
}

#[derive(Subcommand)]
enum Verb {
    /// Validate base axioms, flatness, metric, homotopy data, seeds and series.
    Check { inputs: Vec<PathBuf> },
    /// Cohomology dimensions and harmonic representatives of the endomorphism complex.
    Cohomology { inputs: Vec<PathBuf> },
    /// Solve the Kuranishi recursion from a named seed.
    Solve {
        inputs: Vec<PathBuf>,
        /// Seed name (default: first in name order).
        #[arg(long)]
        seed: Option<String>,
        /// Truncation order (default: parameters.order, else 4).
        #[arg(long)]
        order: Option<u32>,
    },
    /// Transfer a named Maurer–Cartan series along the homotopy data.
    Transfer {
        inputs: Vec<PathBuf>,
        /// Series name (default: first in name order).
        #[arg(long)]
        series: Option<String>,
    },
    /// Gauge the family block to a regular one (and strongify if requested).
    Regularize { inputs: Vec<PathBuf> },
}

impl Verb {
    fn inputs(&self) -> &[PathBuf] {
        match self {
            Verb::Check { inputs } | Verb::Cohomology { inputs } | Verb::Regularize { inputs } => inputs,
            Verb::Solve { inputs, .. } | Verb::Transfer { inputs, .. } => inputs,
        }
    }
}

fn run_one(cli: &Cli, profile: Profile, input: &Path) -> Result<(Outcome, PathBuf), CliError> {
    let start = Instant::now();
    let instance = read_instance(input)?;
    let outcome = match &cli.command {
        Verb::Check { .. } => cmd_check(&instance, profile)?,
        Verb::Cohomology { .. } => cmd_cohomology(&instance, profile)?,
        Verb::Solve { seed, order, .. } => cmd_solve(&instance, seed.as_deref(), *order, profile)?,
        Verb::Transfer { series, .. } => cmd_transfer(&instance, series.as_deref(), profile)?,
        Verb::Regularize { .. } => cmd_regularize(&instance, profile)?,
    };
    let timing = cli.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let report = build_report(&instance, &outcome, profile, timing);
    let path = report_path(&instance, &outcome, input, cli.out_dir.as_deref());
    write_report(&path, &report)?;
    Ok((outcome, path))
}

/// Prints a one-line summary and returns the exit code for this input.
fn summarize(input: &Path, result: Result<(Outcome, PathBuf), CliError>) -> i32 {
    match result {
        Ok((outcome, path)) => {
            let detail = outcome.results.get("verdict").and_then(|v| v.as_str()).unwrap_or("done");
            match &outcome.status {
                Status::Ok => {
                    println!("{}: {} ok, {detail} -> {}", input.display(), outcome.command.name(), path.display());
                    EXIT_OK
                }
                Status::ToleranceFailure { check, residual, threshold, index } => {
                    let at = index.as_ref().map(|i| format!(" at {i:?}")).unwrap_or_default();
                    eprintln!(
                        "{}: {} tolerance failure in {check}: {residual:.3e} > {threshold:.1e}{at} -> {}",
                        input.display(),
                        outcome.command.name(),
                        path.display()
                    );
                    EXIT_TOLERANCE
                }
            }
        }
        Err(e) => {
            eprintln!("{}: {e}", input.display());
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let profile = match cli.tolerance_profile {
        ProfileArg::Default => Profile::DEFAULT,
        ProfileArg::Strict => Profile::STRICT,
    };
    let inputs = cli.command.inputs();
    if inputs.is_empty() {
        eprintln!("no input files given");
        return ExitCode::from(2);
    }
    let codes: Vec<i32> = if cli.batch {
        std::thread::scope(|s| {
            let workers: Vec<_> = inputs.iter().map(|p| s.spawn(|| run_one(&cli, profile, p))).collect();
            let results: Vec<_> = workers.into_iter().map(|w| w.join().expect("worker panicked")).collect();
            inputs.iter().zip(results).map(|(p, r)| summarize(p, r)).collect()
        })
    } else {
        inputs.iter().map(|p| summarize(p, run_one(&cli, profile, p))).collect()
    };
    ExitCode::from(codes.into_iter().max().unwrap_or(0) as u8)
}
