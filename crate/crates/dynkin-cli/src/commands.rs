//! Subcommand implementations.
//!
//! Every command resolves its game description first (from `--spec FILE`
//! or a built-in `--family`), then dispatches on the requested
//! arithmetic. All informational output goes to stdout; failures map to
//! the exit codes in [`crate::error::exit`].

use std::path::{Path, PathBuf};

use dynkin::scalar::sup_distance;
use dynkin::{
    enumerate_equilibria, hitting_payoff, simulate_hitting_payoff, solve_game,
    solve_game_with_tolerance, value_iteration, verify_equilibrium, GameError, GameSpec, InitMode,
    NEReport, Rational, SimulationConfig, Solution, StateSpace, StoppingSet,
};
use serde::Deserialize;

use crate::error::{from_game_error, CliError};
use crate::output;
use crate::recipes::{build_family, FamilyParams};
use crate::scalar_ext::{parse_cells, CliScalar};
use crate::spec_file::{Arithmetic, CellValue, SpecFile};

/// Largest gap tolerated between the solver and an independent oracle
/// before `oracle` reports disagreement (exit code 5).
pub const ORACLE_GAP_LIMIT: f64 = 1e-6;

/// Sup-norm accuracy requested from the fixed-point oracle.
const ORACLE_VI_TOL: f64 = 1e-8;

/// Sweep budget granted to the fixed-point oracle.
const ORACLE_VI_MAX_SWEEPS: usize = 5_000_000;

/// Where a command gets its game description from.
#[derive(Debug, Clone)]
pub struct SpecSource {
    /// Path of a JSON game description.
    pub spec: Option<PathBuf>,
    /// Built-in family name.
    pub family: Option<String>,
    /// Family parameters (sizes, rates, selector).
    pub params: FamilyParams,
}

impl SpecSource {
    /// Load the description, rejecting ambiguous or missing sources.
    pub fn load(&self) -> Result<SpecFile, CliError> {
        match (&self.spec, &self.family) {
            (Some(_), Some(_)) => Err(CliError::Invalid(
                "--spec and --family are mutually exclusive".to_owned(),
            )),
            (Some(path), None) => SpecFile::read(path),
            (None, Some(family)) => build_family(family, &self.params),
            (None, None) => Err(CliError::Invalid(
                "provide a game description with --spec FILE or --family NAME".to_owned(),
            )),
        }
    }
}

fn parse_label_set(text: &str, states: &StateSpace) -> Result<StoppingSet, CliError> {
    let mut members = Vec::new();
    for part in text.split(',') {
        let label = part.trim();
        if label.is_empty() {
            continue;
        }
        let index = states
            .index_of(label)
            .ok_or_else(|| CliError::Invalid(format!("unknown state label {label:?}")))?;
        members.push(index);
    }
    Ok(StoppingSet::new(members))
}

fn solve_with<S: CliScalar>(
    spec: &GameSpec<S>,
    mode: InitMode,
    tol: Option<f64>,
) -> Result<Solution<S>, CliError> {
    match tol {
        Some(t) => {
            if !t.is_finite() || t < 0.0 {
                return Err(CliError::Invalid(format!(
                    "--tol must be a nonnegative finite number, got {t}"
                )));
            }
            solve_game_with_tolerance(spec, mode, S::from_f64(t))
        }
        None => solve_game(spec, mode),
    }
    .map_err(from_game_error)
}

// ── solve ───────────────────────────────────────────────────────────────

/// Solve the game and write `solution.json`, `trace.json`, `values.csv`.
pub fn cmd_solve(
    source: &SpecSource,
    mode_flag: Option<InitMode>,
    arithmetic_flag: Option<Arithmetic>,
    tol: Option<f64>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let file = source.load()?;
    let mode = file.resolve_mode(mode_flag)?;
    match file.resolve_arithmetic(arithmetic_flag)? {
        Arithmetic::Float => solve_typed::<f64>(&file, mode, tol, out_dir),
        Arithmetic::Rational => {
            if tol.is_some() {
                eprintln!("note: exact arithmetic classifies exactly; --tol is ignored");
            }
            solve_typed::<Rational>(&file, mode, None, out_dir)
        }
    }
}

fn solve_typed<S: CliScalar>(
    file: &SpecFile,
    mode: InitMode,
    tol: Option<f64>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let spec = file.build::<S>()?;
    let solution = solve_with(&spec, mode, tol)?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::io(&out_dir.display().to_string(), e))?;
    let solution_path = out_dir.join("solution.json");
    let trace_path = out_dir.join("trace.json");
    let csv_path = out_dir.join("values.csv");
    output::write_string(
        &solution_path,
        &output::to_pretty_json(&output::solution_doc(&spec, &solution)),
    )?;
    output::write_string(
        &trace_path,
        &output::to_pretty_json(&output::trace_doc(&spec, &solution)),
    )?;
    output::write_string(&csv_path, &output::values_csv(&spec, &solution))?;

    let states = spec.states();
    println!(
        "mode: {mode}   arithmetic: {}   tolerance: {}",
        S::ARITHMETIC,
        solution.trace.tolerance.render()
    );
    println!(
        "states: {}   outer iterations: {}   total inner steps: {}   shortcut: {}",
        spec.dim(),
        solution.outer_iterations(),
        solution.trace.total_inner_steps,
        if solution.shortcut_used { "yes" } else { "no" }
    );
    println!(
        "sup_stop: {}",
        output::fmt_label_set(&output::labels(&solution.sup_stop, states))
    );
    println!(
        "inf_stop: {}",
        output::fmt_label_set(&output::labels(&solution.inf_stop, states))
    );
    if spec.dim() <= 12 {
        let rendered: Vec<String> = solution.value.iter().map(CliScalar::render).collect();
        println!("value: [{}]", rendered.join(", "));
    }
    println!(
        "wrote {}, {}, {}",
        solution_path.display(),
        trace_path.display(),
        csv_path.display()
    );
    Ok(())
}

// ── verify ──────────────────────────────────────────────────────────────

/// The fields `verify` needs from a solution file; extra fields (the
/// full trace, metadata) are ignored.
#[derive(Debug, Deserialize)]
struct SolutionFile {
    #[serde(default)]
    meta: Option<SolutionMeta>,
    value: Vec<CellValue>,
    sup_stop: Vec<String>,
    inf_stop: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct SolutionMeta {
    #[serde(default)]
    arithmetic: Option<String>,
}

/// Check a solution file against its game description.
pub fn cmd_verify(
    spec_path: &Path,
    solution_path: &Path,
    arithmetic_flag: Option<Arithmetic>,
) -> Result<(), CliError> {
    let file = SpecFile::read(spec_path)?;
    let text = std::fs::read_to_string(solution_path)
        .map_err(|e| CliError::io(&solution_path.display().to_string(), e))?;
    let sol_file: SolutionFile = serde_json::from_str(&text)
        .map_err(|e| CliError::parse(&solution_path.display().to_string(), e))?;

    // The solution file's own arithmetic is the default: a run is checked
    // in the number system that produced it.
    let arithmetic = match arithmetic_flag {
        Some(a) => a,
        None => match sol_file.meta.as_ref().and_then(|m| m.arithmetic.as_deref()) {
            Some(name) => Arithmetic::from_str(name)?,
            None => file.resolve_arithmetic(None)?,
        },
    };
    match arithmetic {
        Arithmetic::Float => verify_typed::<f64>(&file, &sol_file),
        Arithmetic::Rational => verify_typed::<Rational>(&file, &sol_file),
    }
}

fn verify_typed<S: CliScalar>(file: &SpecFile, sol: &SolutionFile) -> Result<(), CliError> {
    let spec = file.build::<S>()?;
    let value = parse_cells::<S>(&sol.value, "value")?;
    let states = spec.states();
    let sup = parse_label_set(&sol.sup_stop.join(","), states)?;
    let inf = parse_label_set(&sol.inf_stop.join(","), states)?;

    // Contact states carry no stopping obligation; strip them so the
    // recommendation sets meet the verifier's disjointness contract.
    let equality = spec.equality_set();
    let sup_core = sup.difference(&equality);
    let inf_core = inf.difference(&equality);

    let report = verify_equilibrium(&spec, &sup_core, &inf_core, &value).map_err(|e| match e {
        GameError::PreconditionViolated { .. } => CliError::Verification(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    })?;
    print_report(&report, states);
    if report.pass {
        println!("verification: PASS");
        Ok(())
    } else {
        let failing: Vec<String> = report
            .failing_states()
            .iter()
            .map(|&i| states.label(i).to_owned())
            .collect();
        println!("verification: FAIL");
        Err(CliError::Verification(format!(
            "equilibrium conditions violated at {}",
            output::fmt_label_set(&failing)
        )))
    }
}

fn print_report<S: CliScalar>(report: &NEReport<S>, states: &StateSpace) {
    println!("arithmetic: {}", S::ARITHMETIC);
    println!("tolerance: {}", report.tolerance.render());
    println!(
        "{:<10} {:<10} {:>24} {:>24} {:>24}  ok",
        "state", "region", "defect", "V-psi", "phi-V"
    );
    for row in &report.rows {
        println!(
            "{:<10} {:<10} {:>24} {:>24} {:>24}  {}",
            states.label(row.state),
            row.region.to_string(),
            row.defect.render(),
            row.value_minus_psi.render(),
            row.phi_minus_value.render(),
            if row.pass { "yes" } else { "NO" }
        );
    }
}

// ── oracle ──────────────────────────────────────────────────────────────

/// Cross-check the solver against the fixed-point iteration, pair
/// enumeration (on small games), and the mode comparison.
pub fn cmd_oracle(
    source: &SpecSource,
    mode_flag: Option<InitMode>,
    tol: Option<f64>,
    max_states: usize,
) -> Result<(), CliError> {
    let file = source.load()?;
    let mode = file.resolve_mode(mode_flag)?;
    let spec = file.build::<f64>()?;
    let solution = solve_with(&spec, mode, tol)?;
    let states = spec.states();
    let mut failures: Vec<String> = Vec::new();

    // Independent check 1: the value is the fixed point of the dynamic
    // programming operator, approached by iteration from below.
    let vi = value_iteration(&spec, &ORACLE_VI_TOL, ORACLE_VI_MAX_SWEEPS)
        .map_err(|e| CliError::OracleGap(e.to_string()))?;
    let gap = sup_distance(&solution.value, &vi);
    let gap_ok = gap <= ORACLE_GAP_LIMIT;
    println!(
        "fixed-point iteration gap: {} (limit {ORACLE_GAP_LIMIT}) .. {}",
        gap.render(),
        if gap_ok { "ok" } else { "FAIL" }
    );
    if !gap_ok {
        failures.push(format!("fixed-point gap {} exceeds {ORACLE_GAP_LIMIT}", gap.render()));
    }

    // Independent check 2: on small games, try every stop-set pair and
    // confirm the solver's pair is among the survivors.
    if spec.dim() <= max_states {
        let candidates = enumerate_equilibria(&spec, max_states)
            .map_err(|e| CliError::OracleGap(e.to_string()))?;
        println!("equilibrium pairs found by exhaustive search: {}", candidates.len());
        let (sup_core, inf_core) = solution.nash_pair(&spec);
        let mut pair_found = false;
        let mut max_value_gap = 0.0f64;
        for cand in &candidates {
            println!(
                "  A={}  B={}",
                output::fmt_label_set(&output::labels(&cand.sup_set, states)),
                output::fmt_label_set(&output::labels(&cand.inf_set, states))
            );
            pair_found |= cand.sup_set == sup_core && cand.inf_set == inf_core;
            max_value_gap = max_value_gap.max(sup_distance(&cand.value, &solution.value));
        }
        let enum_ok = pair_found && max_value_gap <= ORACLE_GAP_LIMIT;
        println!(
            "solver pair among them: {}; largest value gap: {} .. {}",
            if pair_found { "yes" } else { "NO" },
            max_value_gap.render(),
            if enum_ok { "ok" } else { "FAIL" }
        );
        if !enum_ok {
            failures.push(if pair_found {
                format!("enumerated values differ by {}", max_value_gap.render())
            } else {
                "solver's stop-set pair missing from exhaustive search".to_owned()
            });
        }
    } else {
        println!(
            "equilibrium enumeration skipped ({} states exceed the {max_states}-state cap)",
            spec.dim()
        );
    }

    // Independent check 3: both initializations must bracket each other
    // and agree on the value.
    let comparison = dynkin::compare_modes(&spec).map_err(from_game_error)?;
    let order_ok = comparison.containments_hold && comparison.values_ordered;
    let value_ok = comparison.value_gap <= ORACLE_GAP_LIMIT;
    println!(
        "mode comparison: containments {}; iterate order {}; value gap {} .. {}",
        if comparison.containments_hold { "hold" } else { "VIOLATED" },
        if comparison.values_ordered { "holds" } else { "VIOLATED" },
        comparison.value_gap.render(),
        if order_ok && value_ok { "ok" } else { "FAIL" }
    );
    println!(
        "stopping limits: strict {} / weak {} ({})",
        output::fmt_label_set(&output::labels(&comparison.strict.inf_stop, states)),
        output::fmt_label_set(&output::labels(&comparison.weak.inf_stop, states)),
        if comparison.limits_equal { "equal" } else { "different" }
    );
    if !order_ok {
        failures.push("mode bracketing violated".to_owned());
    }
    if !value_ok {
        failures.push(format!(
            "strict and weak values differ by {}",
            comparison.value_gap.render()
        ));
    }

    if failures.is_empty() {
        println!("oracle agreement: PASS");
        Ok(())
    } else {
        println!("oracle agreement: FAIL");
        Err(CliError::OracleGap(failures.join("; ")))
    }
}

// ── simulate ────────────────────────────────────────────────────────────

/// Flags accepted by `simulate` beyond the game source.
#[derive(Debug, Clone)]
pub struct SimulateOptions {
    /// Maximizer stop set as comma-separated labels; both sets default
    /// to the solver's own recommendation.
    pub sup_set: Option<String>,
    /// Minimizer stop set as comma-separated labels.
    pub inf_set: Option<String>,
    /// Start state label.
    pub start: String,
    /// Initialization mode when the sets come from the solver.
    pub mode: Option<InitMode>,
    /// Number of simulated paths.
    pub paths: usize,
    /// Base RNG seed.
    pub seed: u64,
    /// Optional truncation horizon.
    pub horizon: Option<f64>,
    /// Confidence multiplier on the standard error.
    pub z: f64,
}

/// Monte Carlo estimate of a strategy pair's payoff, checked against
/// the exact hitting payoff.
pub fn cmd_simulate(source: &SpecSource, opts: &SimulateOptions) -> Result<(), CliError> {
    let file = source.load()?;
    if file.resolve_arithmetic(None)? == Arithmetic::Rational {
        eprintln!("note: simulation always runs in float arithmetic");
    }
    let spec = file.build::<f64>()?;
    let states = spec.states();
    let start = states
        .index_of(&opts.start)
        .ok_or_else(|| CliError::Invalid(format!("unknown start state {:?}", opts.start)))?;

    let (sup, inf) = match (&opts.sup_set, &opts.inf_set) {
        (Some(a), Some(b)) => (parse_label_set(a, states)?, parse_label_set(b, states)?),
        (None, None) => {
            let mode = file.resolve_mode(opts.mode)?;
            let solution = solve_with(&spec, mode, None)?;
            println!(
                "stop sets from the {mode}-mode solution: A={} B={}",
                output::fmt_label_set(&output::labels(&solution.sup_stop, states)),
                output::fmt_label_set(&output::labels(&solution.inf_stop, states))
            );
            (solution.sup_stop, solution.inf_stop)
        }
        _ => {
            return Err(CliError::Invalid(
                "--sup-set and --inf-set must be given together (or both omitted)".to_owned(),
            ))
        }
    };

    let exact_vec =
        hitting_payoff(&spec, &sup, &inf).map_err(|e| CliError::Invalid(e.to_string()))?;
    let exact = exact_vec[start];

    let config = SimulationConfig {
        paths: opts.paths,
        seed: opts.seed,
        horizon: opts.horizon,
        confidence_z: opts.z,
    };
    let estimate = simulate_hitting_payoff(&spec, &sup, &inf, start, &config)
        .map_err(|e| CliError::Invalid(e.to_string()))?;

    println!(
        "paths: {}   seed: {}   z: {}",
        estimate.paths_used, opts.seed, opts.z
    );
    println!(
        "estimate: {}   stderr: {}   truncation bias bound: {}",
        estimate.mean.render(),
        estimate.stderr.render(),
        estimate.bias_bound.render()
    );
    println!("exact hitting payoff: {}", exact.render());
    let allowed = opts.z * estimate.stderr + estimate.bias_bound;
    let discrepancy = (exact - estimate.mean).abs();
    println!(
        "discrepancy: {} (allowed {}) .. {}",
        discrepancy.render(),
        allowed.render(),
        if estimate.consistent_with(exact, opts.z) { "consistent" } else { "INCONSISTENT" }
    );
    if estimate.consistent_with(exact, opts.z) {
        Ok(())
    } else {
        Err(CliError::Simulation(format!(
            "simulated mean {} differs from exact value {} by {}, beyond {}",
            estimate.mean.render(),
            exact.render(),
            discrepancy.render(),
            allowed.render()
        )))
    }
}

// ── example ─────────────────────────────────────────────────────────────

/// Emit a built-in family as a spec file (stdout when no path given).
pub fn cmd_example(
    family: &str,
    params: &FamilyParams,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let file = build_family(family, params)?;
    let text = file.to_json_string();
    match out {
        Some(path) => {
            output::write_string(path, &text)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
