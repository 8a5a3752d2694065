//! `dynkin` — command-line front end for the stopping-game solver.
//!
//! Subcommands:
//!
//! * `solve` — run the forward algorithm and write `solution.json`,
//!   `trace.json`, and `values.csv`;
//! * `verify` — check a solution file against its game description;
//! * `oracle` — cross-check the solver with a fixed-point iteration,
//!   exhaustive pair search, and a strict/weak mode comparison;
//! * `simulate` — Monte Carlo estimate of a strategy pair's payoff;
//! * `example` — emit one of the built-in example families.
//!
//! Exit codes: 0 success, 1 I/O, 2 invalid input, 3 solver overflow,
//! 4 verification failure, 5 oracle disagreement, 6 simulation
//! discrepancy.

pub mod commands;
pub mod error;
pub mod output;
pub mod recipes;
pub mod scalar_ext;
pub mod spec_file;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use dynkin::InitMode;

use commands::{SimulateOptions, SpecSource};
use error::{exit, CliError};
use recipes::FamilyParams;
use spec_file::Arithmetic;

#[derive(Debug, Parser)]
#[command(
    name = "dynkin",
    version,
    about = "Solver for discounted two-player stopping games on finite Markov chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a game and write solution.json, trace.json, values.csv
    Solve(SolveArgs),
    /// Check a solution file against its game description
    Verify(VerifyArgs),
    /// Cross-check the solver with independent methods
    Oracle(OracleArgs),
    /// Estimate a strategy pair's payoff by Monte Carlo simulation
    Simulate(SimulateArgs),
    /// Emit a built-in example as a spec file
    Example(ExampleArgs),
}

/// Flags selecting the game description.
#[derive(Debug, Args)]
struct SourceArgs {
    /// Game description file (JSON)
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// Built-in family: four-state-equal | four-state-neq | birth-death | lattice
    #[arg(long, value_name = "NAME")]
    family: Option<String>,
    /// Chain length (birth-death) or grid side (lattice)
    #[arg(long, value_name = "N")]
    n: Option<usize>,
    /// Upward rate of the birth-death chain
    #[arg(long, value_name = "RATE")]
    lambda: Option<f64>,
    /// Downward rate (birth-death) or jump rate (lattice)
    #[arg(long, value_name = "RATE")]
    rate: Option<f64>,
    /// Discount rate
    #[arg(long, value_name = "BETA")]
    beta: Option<f64>,
    /// Payoff selector within the family (1.1, 1.2, 1.3, 2.1, 2.2)
    #[arg(long, value_name = "SEL")]
    selector: Option<String>,
    /// Payoff gap for lattice selector 2.1
    #[arg(long, value_name = "DELTA")]
    delta: Option<f64>,
}

impl SourceArgs {
    fn to_source(&self) -> SpecSource {
        SpecSource {
            spec: self.spec.clone(),
            family: self.family.clone(),
            params: FamilyParams {
                n: self.n,
                lambda: self.lambda,
                rate: self.rate,
                beta: self.beta,
                selector: self.selector.clone(),
                delta: self.delta,
            },
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Initialization mode: strict | weak
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,
    /// Arithmetic: float | rational
    #[arg(long, value_name = "ARITH")]
    arithmetic: Option<String>,
    /// Classification tolerance override (float runs only)
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,
    /// Directory receiving the report files
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Game description file (JSON)
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,
    /// Solution file produced by `solve`
    #[arg(long, value_name = "FILE")]
    solution: PathBuf,
    /// Arithmetic override: float | rational (defaults to the solution's own)
    #[arg(long, value_name = "ARITH")]
    arithmetic: Option<String>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Initialization mode: strict | weak
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,
    /// Classification tolerance override
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,
    /// Enumerate strategy pairs when the game has at most this many states
    #[arg(long, value_name = "N", default_value_t = dynkin::DEFAULT_ENUMERATION_LIMIT)]
    max_states: usize,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Maximizer stop set, comma-separated labels (default: solve first)
    #[arg(long, value_name = "LABELS")]
    sup_set: Option<String>,
    /// Minimizer stop set, comma-separated labels (default: solve first)
    #[arg(long, value_name = "LABELS")]
    inf_set: Option<String>,
    /// Start state label
    #[arg(long, value_name = "LABEL")]
    start: String,
    /// Initialization mode when the sets come from the solver
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,
    /// Number of simulated paths
    #[arg(long, value_name = "N", default_value_t = 100_000)]
    paths: usize,
    /// Base RNG seed
    #[arg(long, value_name = "SEED", default_value_t = 0)]
    seed: u64,
    /// Truncation horizon (default: discounted tail below 1e-4)
    #[arg(long, value_name = "T")]
    horizon: Option<f64>,
    /// Confidence multiplier on the standard error
    #[arg(long, value_name = "Z", default_value_t = 3.0)]
    z: f64,
}

#[derive(Debug, Args)]
struct ExampleArgs {
    /// Family: four-state-equal | four-state-neq | birth-death | lattice
    #[arg(long, value_name = "NAME")]
    family: String,
    /// Chain length (birth-death) or grid side (lattice)
    #[arg(long, value_name = "N")]
    n: Option<usize>,
    /// Upward rate of the birth-death chain
    #[arg(long, value_name = "RATE")]
    lambda: Option<f64>,
    /// Downward rate (birth-death) or jump rate (lattice)
    #[arg(long, value_name = "RATE")]
    rate: Option<f64>,
    /// Discount rate
    #[arg(long, value_name = "BETA")]
    beta: Option<f64>,
    /// Payoff selector within the family (1.1, 1.2, 1.3, 2.1, 2.2)
    #[arg(long, value_name = "SEL")]
    selector: Option<String>,
    /// Payoff gap for lattice selector 2.1
    #[arg(long, value_name = "DELTA")]
    delta: Option<f64>,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn parse_mode(flag: &Option<String>) -> Result<Option<InitMode>, CliError> {
    flag.as_deref()
        .map(|s| InitMode::from_str(s).map_err(|e| CliError::Invalid(e.to_string())))
        .transpose()
}

fn parse_arithmetic(flag: &Option<String>) -> Result<Option<Arithmetic>, CliError> {
    flag.as_deref().map(Arithmetic::from_str).transpose()
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => commands::cmd_solve(
            &args.source.to_source(),
            parse_mode(&args.mode)?,
            parse_arithmetic(&args.arithmetic)?,
            args.tol,
            &args.out,
        ),
        Command::Verify(args) => {
            commands::cmd_verify(&args.spec, &args.solution, parse_arithmetic(&args.arithmetic)?)
        }
        Command::Oracle(args) => commands::cmd_oracle(
            &args.source.to_source(),
            parse_mode(&args.mode)?,
            args.tol,
            args.max_states,
        ),
        Command::Simulate(args) => {
            let opts = SimulateOptions {
                sup_set: args.sup_set.clone(),
                inf_set: args.inf_set.clone(),
                start: args.start.clone(),
                mode: parse_mode(&args.mode)?,
                paths: args.paths,
                seed: args.seed,
                horizon: args.horizon,
                z: args.z,
            };
            commands::cmd_simulate(&args.source.to_source(), &opts)
        }
        Command::Example(args) => {
            let params = FamilyParams {
                n: args.n,
                lambda: args.lambda,
                rate: args.rate,
                beta: args.beta,
                selector: args.selector.clone(),
                delta: args.delta,
            };
            commands::cmd_example(&args.family, &params, args.out.as_deref())
        }
    }
}

/// Parse the command line, run the chosen subcommand, and return the
/// process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    exit::OK
                }
                _ => exit::VALIDATION,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => exit::OK,
        Err(err) => {
            eprintln!("error: {err}");
            err.code()
        }
    }
}
