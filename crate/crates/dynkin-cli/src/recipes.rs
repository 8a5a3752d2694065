//! Built-in example families.
//!
//! Four generators are provided:
//!
//! * `four-state-equal` — a four-state path chain whose strict and weak
//!   initializations reach the same limit by different routes;
//! * `four-state-neq` — the same chain with payoffs that separate the
//!   two initializations' stopping sets while the values agree;
//! * `birth-death` — a nearest-neighbour chain on `{0, …, n-1}` with
//!   three payoff selectors (1.1, 1.2, 1.3);
//! * `lattice` — a random walk on an `n × n` grid with absorbing left
//!   and right columns and two payoff selectors (2.1, 2.2).
//!
//! Each family returns a [`SpecFile`] so the result can be written to
//! disk by `example` or consumed directly by the other subcommands.
//! Exact fractions ("1/5", "60/11") are emitted as strings wherever a
//! binary float could not represent the intended value.

use crate::error::CliError;
use crate::spec_file::{CellValue, SpecFile};

/// Raw `--family` parameters as they arrive from the command line.
#[derive(Debug, Clone, Default)]
pub struct FamilyParams {
    /// Chain length (birth-death) or grid side (lattice).
    pub n: Option<usize>,
    /// Upward rate of the birth-death chain.
    pub lambda: Option<f64>,
    /// Downward rate (birth-death) or jump rate (lattice).
    pub rate: Option<f64>,
    /// Discount rate.
    pub beta: Option<f64>,
    /// Payoff selector within the family.
    pub selector: Option<String>,
    /// Payoff gap for lattice selector 2.1.
    pub delta: Option<f64>,
}

/// Build the requested family, applying per-selector defaults.
pub fn build_family(family: &str, params: &FamilyParams) -> Result<SpecFile, CliError> {
    match family {
        "four-state-equal" => {
            reject_params(family, params)?;
            Ok(four_state_equal())
        }
        "four-state-neq" => {
            reject_params(family, params)?;
            Ok(four_state_neq())
        }
        "birth-death" => birth_death(params),
        "lattice" => lattice(params),
        other => Err(CliError::Invalid(format!(
            "unknown family {other:?}; expected four-state-equal, four-state-neq, \
             birth-death, or lattice"
        ))),
    }
}

fn reject_params(family: &str, params: &FamilyParams) -> Result<(), CliError> {
    if params.n.is_some()
        || params.lambda.is_some()
        || params.rate.is_some()
        || params.beta.is_some()
        || params.selector.is_some()
        || params.delta.is_some()
    {
        return Err(CliError::Invalid(format!(
            "family {family:?} is fully determined and takes no parameters"
        )));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn number_rows(rows: Vec<Vec<f64>>) -> Vec<Vec<CellValue>> {
    rows.into_iter()
        .map(|r| r.into_iter().map(CellValue::from).collect())
        .collect()
}

fn number_cells(values: Vec<f64>) -> Vec<CellValue> {
    values.into_iter().map(CellValue::from).collect()
}

/// Balance each diagonal so rows sum to zero in the same summation
/// order the validator uses.
fn balance_diagonals(rows: &mut [Vec<f64>]) {
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 0.0;
        let total: f64 = row.iter().sum();
        row[i] = -total;
    }
}

// ── Four-state chains ───────────────────────────────────────────────────

fn four_state_generator() -> Vec<Vec<CellValue>> {
    number_rows(vec![
        vec![-1.0, 1.0, 0.0, 0.0],
        vec![1.0, -2.0, 1.0, 0.0],
        vec![0.0, 1.0, -2.0, 1.0],
        vec![0.0, 0.0, 1.0, -1.0],
    ])
}

/// Path chain where the two initialization modes converge to the same
/// stopping sets.  The upper payoff at state 2 equals the one-player
/// value there, 1500/301, stated exactly.
pub fn four_state_equal() -> SpecFile {
    SpecFile {
        states: index_labels(4),
        generator: four_state_generator(),
        beta: CellValue::from("1/5"),
        psi: number_cells(vec![10.0, 4.0, 2.0, 1.0]),
        phi: vec![
            CellValue::from(12.0),
            CellValue::from(8.0),
            CellValue::from("1500/301"),
            CellValue::from(1.0),
        ],
        init: None,
        arithmetic: None,
    }
}

/// Path chain whose strict and weak stopping sets differ while the
/// value functions agree.
pub fn four_state_neq() -> SpecFile {
    SpecFile {
        states: index_labels(4),
        generator: four_state_generator(),
        beta: CellValue::from("1/5"),
        psi: number_cells(vec![4.0, 7.0, 0.0, 5.0]),
        phi: vec![
            CellValue::from(5.0),
            CellValue::from(10.0),
            CellValue::from("60/11"),
            CellValue::from(5.0),
        ],
        init: None,
        arithmetic: None,
    }
}

// ── Birth-death chains ──────────────────────────────────────────────────

fn birth_death(params: &FamilyParams) -> Result<SpecFile, CliError> {
    if params.delta.is_some() {
        return Err(CliError::Invalid(
            "--delta applies only to the lattice family".to_owned(),
        ));
    }
    let selector = params.selector.as_deref().unwrap_or("1.1");
    let (def_lambda, def_rate, def_beta) = match selector {
        "1.1" | "1.2" => (40.0, 28.0, 0.1),
        "1.3" => (14.0, 12.0, 0.05),
        other => {
            return Err(CliError::Invalid(format!(
                "birth-death selector must be 1.1, 1.2, or 1.3, got {other:?}"
            )))
        }
    };
    let n = params.n.unwrap_or(50);
    if n < 2 {
        return Err(CliError::Invalid(format!(
            "birth-death needs at least 2 states, got n={n}"
        )));
    }
    let lambda = positive("--lambda", params.lambda.unwrap_or(def_lambda))?;
    let rate = positive("--rate", params.rate.unwrap_or(def_rate))?;
    let beta = positive("--beta", params.beta.unwrap_or(def_beta))?;

    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n - 1 {
        rows[i][i + 1] = lambda;
    }
    for i in 1..n {
        rows[i][i - 1] = rate;
    }
    balance_diagonals(&mut rows);

    let mut psi = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    for p in 0..n {
        let x = p as f64;
        match selector {
            "1.1" => {
                let base = 10.0 + x / 4.0 + 3.0 * x.cos() + 2.0 * (x / 2.0).sin();
                psi.push(base);
                phi.push(base + 3.0);
            }
            "1.2" => {
                let base = 10.0 + x / 4.0 + 3.0 * x.cos() + 2.0 * (x / 2.0).sin();
                psi.push(base);
                phi.push(base + 4.0 * ((x / 5.0).sin() + 0.7).max(0.0));
            }
            _ => {
                let base = (x - 25.0).max(0.0);
                psi.push(base);
                phi.push(base + 5.0);
            }
        }
    }

    Ok(SpecFile {
        states: index_labels(n),
        generator: number_rows(rows),
        beta: CellValue::from(beta),
        psi: number_cells(psi),
        phi: number_cells(phi),
        init: None,
        arithmetic: None,
    })
}

// ── Lattice walks ───────────────────────────────────────────────────────

fn lattice(params: &FamilyParams) -> Result<SpecFile, CliError> {
    if params.lambda.is_some() {
        return Err(CliError::Invalid(
            "--lambda applies only to the birth-death family".to_owned(),
        ));
    }
    let selector = params.selector.as_deref().unwrap_or("2.1");
    let (def_rate, def_beta) = match selector {
        "2.1" => (5.0, 0.05),
        "2.2" => (500.0, 1.0),
        other => {
            return Err(CliError::Invalid(format!(
                "lattice selector must be 2.1 or 2.2, got {other:?}"
            )))
        }
    };
    if selector == "2.2" && params.delta.is_some() {
        return Err(CliError::Invalid(
            "--delta applies only to lattice selector 2.1".to_owned(),
        ));
    }
    let n = params.n.unwrap_or(13);
    if n < 3 {
        return Err(CliError::Invalid(format!(
            "lattice needs a side of at least 3, got n={n}"
        )));
    }
    let rate = positive("--rate", params.rate.unwrap_or(def_rate))?;
    let beta = positive("--beta", params.beta.unwrap_or(def_beta))?;
    let delta = positive("--delta", params.delta.unwrap_or(8.0))?;

    let nn = n * n;
    let point = |i: usize, j: usize| i + j * n;
    let mut rows = vec![vec![0.0; nn]; nn];
    // Rows y >= 1 move to all in-grid neighbours; the bottom row moves
    // only sideways.
    for j in 1..n {
        for i in 1..n {
            let steps: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
            for (di, dj) in steps {
                let (x, y) = (i as i64 + di, j as i64 + dj);
                if (0..n as i64).contains(&x) && (0..n as i64).contains(&y) {
                    rows[point(i, j)][point(x as usize, y as usize)] = rate;
                }
            }
        }
    }
    for i in 1..n {
        for di in [-1i64, 1] {
            let x = i as i64 + di;
            if (0..n as i64).contains(&x) {
                rows[point(i, 0)][point(x as usize, 0)] = rate;
            }
        }
    }
    // The left and right columns absorb: their rows vanish entirely.
    for j in 0..n {
        rows[point(0, j)] = vec![0.0; nn];
        rows[point(n - 1, j)] = vec![0.0; nn];
    }
    balance_diagonals(&mut rows);

    let half = nn as f64 / 2.0;
    let psi: Vec<f64> = (0..nn).map(|p| (p as f64 - half).max(0.0)).collect();
    let phi: Vec<f64> = match selector {
        "2.1" => psi.iter().map(|v| v + delta).collect(),
        _ => psi.iter().map(|v| 1.5 * v).collect(),
    };

    Ok(SpecFile {
        states: index_labels(nn),
        generator: number_rows(rows),
        beta: CellValue::from(beta),
        psi: number_cells(psi),
        phi: number_cells(phi),
        init: None,
        arithmetic: None,
    })
}
