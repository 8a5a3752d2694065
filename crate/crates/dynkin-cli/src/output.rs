//! Report documents written by `solve`: solution JSON, trace JSON, and
//! a per-state CSV.  All three are deterministic byte-for-byte — fields
//! appear in declaration order, sets are sorted by state index, floats
//! print in shortest round-trip form, and no timestamps are embedded.

use std::path::Path;

use dynkin::{GameSpec, InitMode, OnePlayerResult, Solution, StateSpace, StoppingSet};
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;
use crate::scalar_ext::CliScalar;

/// Metadata block repeated at the top of every JSON report.
#[derive(Debug, Serialize)]
pub struct MetaDoc {
    /// Producing tool, always "dynkin".
    pub tool: &'static str,
    /// Crate version.
    pub version: &'static str,
    /// Initialization mode of the run.
    pub mode: String,
    /// Arithmetic of the run ("float" | "rational").
    pub arithmetic: &'static str,
    /// Classification tolerance actually used.
    pub tolerance: Value,
}

/// One outer step: the candidate set, the inner stop set, and the
/// iterate's value vector.
#[derive(Debug, Serialize)]
pub struct IterationDoc {
    /// Outer index, starting at 1.
    pub k: usize,
    /// Upper player's candidate set after this step.
    #[serde(rename = "S")]
    pub s: Vec<String>,
    /// Lower player's optimal set inside this step.
    #[serde(rename = "D")]
    pub d: Vec<String>,
    /// Value vector of this iterate.
    #[serde(rename = "V")]
    pub v: Vec<Value>,
}

/// Machine-readable solution summary (`solution.json`).
#[derive(Debug, Serialize)]
pub struct SolutionDoc {
    pub meta: MetaDoc,
    /// Final value vector.
    pub value: Vec<Value>,
    /// Stopping recommendation for the lower-payoff player.
    pub sup_stop: Vec<String>,
    /// Stopping recommendation for the upper-payoff player.
    pub inf_stop: Vec<String>,
    /// Whether the one-player shortcut applied.
    pub shortcut_used: bool,
    /// Number of outer iterations.
    pub outer_iterations: usize,
    /// Total inner sweeps across all outer iterations.
    pub total_inner_steps: usize,
    /// Initial one-player value vector.
    pub v0: Vec<Value>,
    /// Per-iteration sets and values.
    pub iterations: Vec<IterationDoc>,
}

/// Inner-sweep record inside the trace document.
#[derive(Debug, Serialize)]
pub struct SweepDoc {
    /// Candidate stop set at this sweep.
    pub set: Vec<String>,
    /// Value vector at this sweep.
    pub value: Vec<Value>,
}

/// One-player run record: final data plus every sweep.
#[derive(Debug, Serialize)]
pub struct OnePlayerDoc {
    pub value: Vec<Value>,
    pub stop_set: Vec<String>,
    pub iterations: usize,
    pub sweeps: Vec<SweepDoc>,
}

/// Outer step with its full inner run (`trace.json` entries).
#[derive(Debug, Serialize)]
pub struct OuterDoc {
    pub k: usize,
    #[serde(rename = "S")]
    pub s: Vec<String>,
    #[serde(rename = "D")]
    pub d: Vec<String>,
    #[serde(rename = "V")]
    pub v: Vec<Value>,
    pub inner_iterations: usize,
    pub inner_sweeps: Vec<SweepDoc>,
}

/// Full iteration trace (`trace.json`).
#[derive(Debug, Serialize)]
pub struct TraceDoc {
    pub meta: MetaDoc,
    pub v0: OnePlayerDoc,
    pub outer: Vec<OuterDoc>,
    pub total_inner_steps: usize,
}

/// Sorted labels of a stopping set.
pub fn labels(set: &StoppingSet, states: &StateSpace) -> Vec<String> {
    set.members()
        .iter()
        .map(|&i| states.label(i).to_owned())
        .collect()
}

/// Render a label list as `{a, b, c}` for terminal summaries.
pub fn fmt_label_set(labels: &[String]) -> String {
    format!("{{{}}}", labels.join(", "))
}

fn vec_json<S: CliScalar>(values: &[S]) -> Vec<Value> {
    values.iter().map(CliScalar::to_json).collect()
}

fn one_player_doc<S: CliScalar>(run: &OnePlayerResult<S>, states: &StateSpace) -> OnePlayerDoc {
    OnePlayerDoc {
        value: vec_json(&run.value),
        stop_set: labels(&run.stop_set, states),
        iterations: run.iterations,
        sweeps: run
            .trace
            .iter()
            .map(|it| SweepDoc {
                set: labels(&it.set, states),
                value: vec_json(&it.value),
            })
            .collect(),
    }
}

/// Metadata block for the given run settings.
pub fn meta_doc<S: CliScalar>(mode: InitMode, tolerance: &S) -> MetaDoc {
    MetaDoc {
        tool: "dynkin",
        version: env!("CARGO_PKG_VERSION"),
        mode: mode.to_string(),
        arithmetic: S::ARITHMETIC,
        tolerance: tolerance.to_json(),
    }
}

/// Assemble `solution.json`.
pub fn solution_doc<S: CliScalar>(spec: &GameSpec<S>, solution: &Solution<S>) -> SolutionDoc {
    let states = spec.states();
    let trace = &solution.trace;
    SolutionDoc {
        meta: meta_doc(trace.mode, &trace.tolerance),
        value: vec_json(&solution.value),
        sup_stop: labels(&solution.sup_stop, states),
        inf_stop: labels(&solution.inf_stop, states),
        shortcut_used: solution.shortcut_used,
        outer_iterations: solution.outer_iterations(),
        total_inner_steps: trace.total_inner_steps,
        v0: vec_json(&trace.v0.value),
        iterations: trace
            .outer
            .iter()
            .enumerate()
            .map(|(idx, step)| IterationDoc {
                k: idx + 1,
                s: labels(&step.inf_set, states),
                d: labels(&step.inner.stop_set, states),
                v: vec_json(&step.inner.value),
            })
            .collect(),
    }
}

/// Assemble `trace.json`.
pub fn trace_doc<S: CliScalar>(spec: &GameSpec<S>, solution: &Solution<S>) -> TraceDoc {
    let states = spec.states();
    let trace = &solution.trace;
    TraceDoc {
        meta: meta_doc(trace.mode, &trace.tolerance),
        v0: one_player_doc(&trace.v0, states),
        outer: trace
            .outer
            .iter()
            .enumerate()
            .map(|(idx, step)| OuterDoc {
                k: idx + 1,
                s: labels(&step.inf_set, states),
                d: labels(&step.inner.stop_set, states),
                v: vec_json(&step.inner.value),
                inner_iterations: step.inner.iterations,
                inner_sweeps: step
                    .inner
                    .trace
                    .iter()
                    .map(|it| SweepDoc {
                        set: labels(&it.set, states),
                        value: vec_json(&it.value),
                    })
                    .collect(),
            })
            .collect(),
        total_inner_steps: trace.total_inner_steps,
    }
}

fn csv_cell(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_owned()
    }
}

/// Assemble `values.csv`: one row per state with the payoffs, every
/// outer iterate, and the final value.
pub fn values_csv<S: CliScalar>(spec: &GameSpec<S>, solution: &Solution<S>) -> String {
    let states = spec.states();
    let trace = &solution.trace;
    let mut header = String::from("state,psi,phi,V0");
    for k in 1..=trace.outer.len() {
        header.push_str(&format!(",V{k}"));
    }
    header.push_str(",V\n");

    let mut out = header;
    for i in 0..spec.dim() {
        let mut row = vec![
            csv_cell(states.label(i)),
            spec.psi()[i].render(),
            spec.phi()[i].render(),
            trace.v0.value[i].render(),
        ];
        for step in &trace.outer {
            row.push(step.inner.value[i].render());
        }
        row.push(solution.value[i].render());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Serialize a document as pretty JSON with a trailing newline.
pub fn to_pretty_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report documents serialize");
    s.push('\n');
    s
}

/// Write a report file, wrapping I/O errors with the path.
pub fn write_string(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::io(&path.display().to_string(), e))
}
