//! Finite-state continuous-time Markov chains.
//!
//! A chain on states `{0, ..., n-1}` is described by its generator matrix
//! `Q`: off-diagonal entries `Q(x, y) >= 0` are jump rates, each diagonal
//! entry is minus the total exit rate of its row, so every row sums to
//! zero. A row of zeros makes its state absorbing.
//!
//! This module owns:
//!
//! * [`StateSpace`], the labelled state set;
//! * [`GeneratorMatrix`], a validated generator with matrix-vector
//!   application, used by every solver in the crate;
//! * uniformization ([`GeneratorMatrix::uniformized`]): for any rate
//!   `L >= max_x |Q(x, x)|` the matrix `P = I + Q / L` is a stochastic
//!   transition matrix, and the chain is a discrete-time walk under `P`
//!   observed at the jumps of a rate-`L` Poisson clock;
//! * communicating-class decomposition
//!   ([`GeneratorMatrix::class_decomposition`]): strongly connected
//!   components of the support graph `x -> y` iff `Q(x, y) > 0`, with a
//!   class recurrent exactly when no rate leads out of it.
//!
//! Validation policy: negative off-diagonal rates are rejected outright,
//! whatever their size, because a sign error is structural and no tolerance
//! makes it right. Row sums are checked against an absolute tolerance that
//! scales with the largest exit rate, so float-built generators with
//! rounding dust pass while genuinely leaky rows fail. Over an exact scalar
//! type the tolerance is zero and row sums must vanish exactly.

use std::collections::HashSet;

use thiserror::Error;

use crate::linalg;
use crate::scalar::{max_of, Scalar};

// ── Errors ──────────────────────────────────────────────────────────────

/// Rejected [`StateSpace`] construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateSpaceError {
    /// A state space must contain at least one state.
    #[error("state space must contain at least one state")]
    Empty,
    /// Labels must be pairwise distinct.
    #[error("duplicate state label {label:?}")]
    DuplicateLabel { label: String },
}

/// A single reason a candidate generator matrix failed validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorViolation<S: Scalar> {
    /// Off-diagonal rates are jump intensities and can never be negative.
    #[error("negative off-diagonal rate {value} at ({row}, {col})")]
    NegativeOffDiagonal { row: usize, col: usize, value: S },
    /// Every generator row must sum to zero (within the row-sum tolerance).
    #[error("row {row} sums to {residual}, not zero")]
    RowSumNonzero { row: usize, residual: S },
}

/// Errors from generator construction and use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CtmcError<S: Scalar> {
    /// The generator has no rows.
    #[error("generator has no rows")]
    Empty,
    /// A row's length differs from the number of rows.
    #[error("row {row} has {len} entries, expected {expected}")]
    NonSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    /// An entry is NaN or infinite.
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    /// Structural validation failed; all violations are listed.
    #[error("{}", describe_violations(.0))]
    InvalidGenerator(Vec<GeneratorViolation<S>>),
    /// A vector's length does not match the state count.
    #[error("vector has {got} entries, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    /// Uniformization slack must be finite and nonnegative.
    #[error("uniformization slack must be finite and nonnegative, got {0}")]
    InvalidSlack(S),
    /// A validation tolerance must be finite and nonnegative.
    #[error("validation tolerance must be finite and nonnegative, got {0}")]
    InvalidTolerance(S),
}

fn describe_violations<S: Scalar>(violations: &[GeneratorViolation<S>]) -> String {
    match violations.first() {
        Some(first) if violations.len() == 1 => format!("invalid generator: {first}"),
        Some(first) => format!(
            "invalid generator ({} violations; first: {first})",
            violations.len()
        ),
        None => "invalid generator".to_string(),
    }
}

// ── State space ─────────────────────────────────────────────────────────

/// An ordered, labelled, nonempty finite state set.
///
/// States are addressed by index everywhere in the crate; labels exist for
/// input and reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    /// Build from explicit labels. Labels must be nonempty as a list and
    /// pairwise distinct.
    pub fn new(labels: Vec<String>) -> Result<Self, StateSpaceError> {
        if labels.is_empty() {
            return Err(StateSpaceError::Empty);
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(StateSpaceError::DuplicateLabel {
                    label: label.clone(),
                });
            }
        }
        Ok(Self { labels })
    }

    /// The state space `{0, ..., n-1}` with the indices as labels.
    pub fn indexed(n: usize) -> Result<Self, StateSpaceError> {
        if n == 0 {
            return Err(StateSpaceError::Empty);
        }
        Ok(Self {
            labels: (0..n).map(|i| i.to_string()).collect(),
        })
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false; a state space is nonempty by construction.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Label of a state index.
    ///
    /// # Panics
    /// If `state >= self.len()`.
    pub fn label(&self, state: usize) -> &str {
        &self.labels[state]
    }

    /// All labels in index order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Index of a label, if present.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

// ── Generator matrix ────────────────────────────────────────────────────

/// A validated CTMC generator on `n` states, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix<S> {
    n: usize,
    entries: Vec<S>,
}

impl<S: Scalar> GeneratorMatrix<S> {
    /// Validate and store a generator given as rows.
    ///
    /// The row-sum tolerance defaults to
    /// `S::tolerance_unit() * max(1, max_x |Q(x, x)|)`, which admits the
    /// rounding residue of float-assembled generators and nothing more.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self, CtmcError<S>> {
        let (n, entries) = collect_square(rows)?;
        let tolerance = default_row_sum_tolerance(n, &entries);
        Self::validated(n, entries, tolerance)
    }

    /// Validate with an explicit row-sum tolerance.
    pub fn from_rows_with_tolerance(
        rows: Vec<Vec<S>>,
        tolerance: S,
    ) -> Result<Self, CtmcError<S>> {
        if !tolerance.is_finite_value() || tolerance < S::zero() {
            return Err(CtmcError::InvalidTolerance(tolerance));
        }
        let (n, entries) = collect_square(rows)?;
        Self::validated(n, entries, tolerance)
    }

    fn validated(n: usize, entries: Vec<S>, tolerance: S) -> Result<Self, CtmcError<S>> {
        let mut violations = Vec::new();
        for row in 0..n {
            let mut sum = S::zero();
            for col in 0..n {
                let value = entries[row * n + col].clone();
                if row != col && value < S::zero() {
                    violations.push(GeneratorViolation::NegativeOffDiagonal { row, col, value: value.clone() });
                }
                sum += value;
            }
            if sum.abs() > tolerance {
                violations.push(GeneratorViolation::RowSumNonzero { row, residual: sum });
            }
        }
        if violations.is_empty() {
            Ok(Self { n, entries })
        } else {
            Err(CtmcError::InvalidGenerator(violations))
        }
    }

    /// Number of states.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// The rate `Q(row, col)`.
    ///
    /// # Panics
    /// If either index is out of range.
    pub fn entry(&self, row: usize, col: usize) -> &S {
        &self.entries[row * self.n + col]
    }

    /// All entries, row-major.
    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    /// The matrix-vector product `Q f`, i.e. the function
    /// `x -> sum_y Q(x, y) f(y)`.
    pub fn apply(&self, f: &[S]) -> Result<Vec<S>, CtmcError<S>> {
        if f.len() != self.n {
            return Err(CtmcError::DimensionMismatch {
                got: f.len(),
                expected: self.n,
            });
        }
        Ok(linalg::mat_vec(self.n, &self.entries, f))
    }

    /// The largest exit rate `max_x |Q(x, x)|`.
    pub fn max_exit_rate(&self) -> S {
        let mut best = S::zero();
        for x in 0..self.n {
            best = max_of(best, self.entries[x * self.n + x].abs());
        }
        best
    }

    /// Uniformize at rate `L = (1 + slack) * max_x |Q(x, x)|` (rate one for
    /// the zero generator), returning the stochastic matrix `P = I + Q / L`
    /// together with `L`. Any `slack >= 0` is valid; larger slack trades a
    /// lazier walk for a safety margin on the diagonal.
    pub fn uniformized(&self, slack: S) -> Result<UniformizedChain<S>, CtmcError<S>> {
        if !slack.is_finite_value() || slack < S::zero() {
            return Err(CtmcError::InvalidSlack(slack));
        }
        let max_rate = self.max_exit_rate();
        let rate = if max_rate.is_zero() {
            S::one()
        } else {
            (S::one() + slack) * max_rate
        };
        let n = self.n;
        let mut transition = Vec::with_capacity(n * n);
        for row in 0..n {
            for col in 0..n {
                let mut p = self.entries[row * n + col].clone() / rate.clone();
                if row == col {
                    p += S::one();
                }
                transition.push(p);
            }
        }
        Ok(UniformizedChain { n, rate, transition })
    }

    /// Decompose the state space into communicating classes.
    pub fn class_decomposition(&self) -> ClassDecomposition {
        let n = self.n;
        let adjacency: Vec<Vec<usize>> = (0..n)
            .map(|x| {
                (0..n)
                    .filter(|&y| y != x && self.entries[x * n + y] > S::zero())
                    .collect()
            })
            .collect();
        let mut classes: Vec<CommClass> = strongly_connected_components(n, &adjacency)
            .into_iter()
            .map(|mut states| {
                states.sort_unstable();
                let recurrent = states
                    .iter()
                    .all(|&x| adjacency[x].iter().all(|y| states.contains(y)));
                CommClass { states, recurrent }
            })
            .collect();
        classes.sort_by_key(|class| class.states[0]);
        ClassDecomposition { classes }
    }
}

fn collect_square<S: Scalar>(rows: Vec<Vec<S>>) -> Result<(usize, Vec<S>), CtmcError<S>> {
    let n = rows.len();
    if n == 0 {
        return Err(CtmcError::Empty);
    }
    let mut entries = Vec::with_capacity(n * n);
    for (row_index, row) in rows.into_iter().enumerate() {
        if row.len() != n {
            return Err(CtmcError::NonSquare {
                row: row_index,
                len: row.len(),
                expected: n,
            });
        }
        for (col_index, value) in row.into_iter().enumerate() {
            if !value.is_finite_value() {
                return Err(CtmcError::NonFinite {
                    row: row_index,
                    col: col_index,
                });
            }
            entries.push(value);
        }
    }
    Ok((n, entries))
}

fn default_row_sum_tolerance<S: Scalar>(n: usize, entries: &[S]) -> S {
    let mut max_diag = S::one();
    for x in 0..n {
        max_diag = max_of(max_diag, entries[x * n + x].abs());
    }
    S::tolerance_unit() * max_diag
}

// ── Uniformized chain ───────────────────────────────────────────────────

/// The discrete-time skeleton of a chain uniformized at `rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformizedChain<S> {
    n: usize,
    /// Poisson clock rate `L`.
    rate: S,
    /// Row-major stochastic matrix `P = I + Q / L`.
    transition: Vec<S>,
}

impl<S: Scalar> UniformizedChain<S> {
    /// Number of states.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// The uniformization rate `L`.
    pub fn rate(&self) -> &S {
        &self.rate
    }

    /// Row `x` of the transition matrix `P`.
    pub fn row(&self, x: usize) -> &[S] {
        &self.transition[x * self.n..(x + 1) * self.n]
    }

    /// The product `P w`.
    pub fn apply(&self, w: &[S]) -> Result<Vec<S>, CtmcError<S>> {
        if w.len() != self.n {
            return Err(CtmcError::DimensionMismatch {
                got: w.len(),
                expected: self.n,
            });
        }
        Ok(linalg::mat_vec(self.n, &self.transition, w))
    }
}

// ── Communicating classes ───────────────────────────────────────────────

/// One communicating class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommClass {
    /// Member states, sorted ascending.
    pub states: Vec<usize>,
    /// True when no rate leads out of the class, i.e. the chain started in
    /// the class stays there forever.
    pub recurrent: bool,
}

/// All communicating classes, sorted by their smallest member state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecomposition {
    pub classes: Vec<CommClass>,
}

impl ClassDecomposition {
    /// The recurrent classes only.
    pub fn recurrent_classes(&self) -> impl Iterator<Item = &CommClass> {
        self.classes.iter().filter(|class| class.recurrent)
    }
}

/// Iterative Tarjan strongly-connected-components. Returned components are
/// in reverse topological order; callers re-sort as needed.
fn strongly_connected_components(n: usize, adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut components: Vec<Vec<usize>> = Vec::new();
    // Explicit DFS frames (node, next child slot) instead of recursion, so
    // deep chains cannot overflow the call stack.
    let mut frames: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        frames.push((root, 0));

        while let Some(frame) = frames.last_mut() {
            let v = frame.0;
            if frame.1 < adjacency[v].len() {
                let w = adjacency[v][frame.1];
                frame.1 += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(parent) = frames.last() {
                    let p = parent.0;
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("Tarjan stack cannot underflow");
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    components.push(component);
                }
            }
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn two_state() -> GeneratorMatrix<f64> {
        GeneratorMatrix::from_rows(vec![vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap()
    }

    #[test]
    fn indexed_state_space_labels_by_index() {
        let space = StateSpace::indexed(3).unwrap();
        assert_eq!(space.len(), 3);
        assert_eq!(space.label(2), "2");
        assert_eq!(space.index_of("1"), Some(1));
        assert_eq!(space.index_of("7"), None);
    }

    #[test]
    fn state_space_rejects_duplicates_and_empty() {
        assert_eq!(StateSpace::indexed(0), Err(StateSpaceError::Empty));
        let err = StateSpace::new(vec!["a".into(), "a".into()]).unwrap_err();
        assert_eq!(err, StateSpaceError::DuplicateLabel { label: "a".into() });
    }

    #[test]
    fn accepts_a_valid_generator() {
        let q = two_state();
        assert_eq!(q.dim(), 2);
        assert_eq!(*q.entry(1, 0), 2.0);
        assert_eq!(q.max_exit_rate(), 2.0);
    }

    #[test]
    fn rejects_any_negative_off_diagonal_no_matter_how_small() {
        let err =
            GeneratorMatrix::from_rows(vec![vec![-1.0, 1.0], vec![-1e-15, 1e-15]]).unwrap_err();
        match err {
            CtmcError::InvalidGenerator(violations) => {
                assert!(matches!(
                    violations[0],
                    GeneratorViolation::NegativeOffDiagonal { row: 1, col: 0, .. }
                ));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn row_sum_tolerance_scales_with_exit_rate() {
        // Residual 1e-7 on a row with exit rate 1000: tolerance is
        // 1e-9 * 1000 = 1e-6, so this passes.
        let q = GeneratorMatrix::from_rows(vec![
            vec![-1000.0, 1000.0 + 1e-7],
            vec![1.0, -1.0],
        ]);
        assert!(q.is_ok());
        // The same residual on a unit-rate generator fails.
        let err =
            GeneratorMatrix::from_rows(vec![vec![-1.0, 1.0 + 1e-7], vec![1.0, -1.0]]).unwrap_err();
        assert!(matches!(err, CtmcError::InvalidGenerator(_)));
    }

    #[test]
    fn rational_row_sums_must_vanish_exactly() {
        let ok = GeneratorMatrix::from_rows(vec![
            vec![rat(-1, 3), rat(1, 3)],
            vec![rat(0, 1), rat(0, 1)],
        ]);
        assert!(ok.is_ok());
        let err = GeneratorMatrix::from_rows(vec![
            vec![rat(-1, 3), rat(333333, 1000000)],
            vec![rat(0, 1), rat(0, 1)],
        ])
        .unwrap_err();
        assert!(matches!(err, CtmcError::InvalidGenerator(_)));
    }

    #[test]
    fn rejects_shape_and_finiteness_problems() {
        assert_eq!(
            GeneratorMatrix::<f64>::from_rows(vec![]).unwrap_err(),
            CtmcError::Empty
        );
        assert_eq!(
            GeneratorMatrix::from_rows(vec![vec![-1.0, 1.0], vec![1.0]]).unwrap_err(),
            CtmcError::NonSquare { row: 1, len: 1, expected: 2 }
        );
        assert_eq!(
            GeneratorMatrix::from_rows(vec![vec![f64::NAN, 0.0], vec![0.0, 0.0]]).unwrap_err(),
            CtmcError::NonFinite { row: 0, col: 0 }
        );
    }

    #[test]
    fn apply_computes_q_times_f() {
        let q = two_state();
        // Qf at x = sum_y Q(x,y) f(y): (-1*3 + 1*5, 2*3 - 2*5) = (2, -4).
        assert_eq!(q.apply(&[3.0, 5.0]).unwrap(), vec![2.0, -4.0]);
        assert!(matches!(
            q.apply(&[1.0]).unwrap_err(),
            CtmcError::DimensionMismatch { got: 1, expected: 2 }
        ));
    }

    #[test]
    fn uniformization_produces_a_stochastic_matrix() {
        let q = two_state();
        let chain = q.uniformized(0.5).unwrap();
        assert_eq!(*chain.rate(), 3.0);
        for x in 0..2 {
            let row_sum: f64 = chain.row(x).iter().sum();
            assert!((row_sum - 1.0).abs() < 1e-12);
            assert!(chain.row(x).iter().all(|&p| p >= 0.0));
        }
        // P = I + Q/3: first row (1 - 1/3, 1/3).
        assert!((chain.row(0)[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_generator_uniformizes_at_rate_one() {
        let q = GeneratorMatrix::from_rows(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let chain = q.uniformized(0.0).unwrap();
        assert_eq!(*chain.rate(), 1.0);
        assert_eq!(chain.row(0), &[1.0, 0.0]);
    }

    #[test]
    fn negative_slack_is_rejected() {
        let err = two_state().uniformized(-0.1).unwrap_err();
        assert!(matches!(err, CtmcError::InvalidSlack(_)));
    }

    #[test]
    fn class_decomposition_separates_transient_and_recurrent() {
        // 0 -> 1 -> 2 <-> 3, state 2/3 a closed cycle, 0 and 1 transient.
        let q = GeneratorMatrix::from_rows(vec![
            vec![-1.0, 1.0, 0.0, 0.0],
            vec![0.0, -1.0, 1.0, 0.0],
            vec![0.0, 0.0, -1.0, 1.0],
            vec![0.0, 0.0, 1.0, -1.0],
        ])
        .unwrap();
        let decomp = q.class_decomposition();
        assert_eq!(decomp.classes.len(), 3);
        assert_eq!(decomp.classes[0].states, vec![0]);
        assert!(!decomp.classes[0].recurrent);
        assert_eq!(decomp.classes[1].states, vec![1]);
        assert!(!decomp.classes[1].recurrent);
        assert_eq!(decomp.classes[2].states, vec![2, 3]);
        assert!(decomp.classes[2].recurrent);
    }

    #[test]
    fn absorbing_state_is_its_own_recurrent_class() {
        let q = GeneratorMatrix::from_rows(vec![vec![-1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let decomp = q.class_decomposition();
        assert_eq!(decomp.classes[1].states, vec![1]);
        assert!(decomp.classes[1].recurrent);
        assert_eq!(decomp.recurrent_classes().count(), 1);
    }
}
