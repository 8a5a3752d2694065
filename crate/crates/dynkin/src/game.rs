//! The two-player solver: nested forward iteration for zero-sum stopping
//! games, plus the equilibrium verifier and the strict/weak comparison.
//!
//! The game: a maximizer picks a stopping time `tau`, a minimizer picks
//! `gamma`, and the payoff (paid by the minimizer to the maximizer) is
//!
//! ```text
//!     R_x(tau, gamma) = E_x[ exp(-beta tau)  psi(X_tau)   ; tau <= gamma ]
//!                     + E_x[ exp(-beta gamma) phi(X_gamma) ; tau >  gamma ],
//! ```
//!
//! with ties paying the maximizer's `psi` and either time being infinite
//! contributing zero. For `0 <= psi <= phi` the game has a value `V` with
//! `psi <= V <= phi`, achieved by hitting-time strategies.
//!
//! The algorithm runs the one-player forward solver inside a shrinking
//! outer iteration on the minimizer's candidate set:
//!
//! ```text
//!     V0   = unconstrained maximizer value (forward algorithm)
//!     if { V0 > phi } is empty:  V = V0 and both critical sets read off V0
//!     S1   = { V0 > phi } union { phi = psi }        (strict start)
//!            or { V0 >= phi }                        (weak start)
//!     Vk   = maximizer's best reply against h(Sk)    (inner forward loop)
//!     Sk+1 = ( Sk intersect { Q[Vk] - beta Vk >= 0 } ) union { phi = psi }
//! ```
//!
//! stopping when `Sk+1 = Sk`. The sets `Sk` decrease, the maximizer's
//! sets `Dk` increase, the values `Vk` decrease, and the stable triple
//! gives the value and a Nash pair: stop sets `D_infinity union
//! { phi = psi }` for the maximizer and `S_infinity` for the minimizer.
//! Both starts reach the same value; they may reach different (equally
//! valid) equilibria, which is exactly what [`compare_modes`] reports.
//!
//! Every set-membership decision — `{V0 > phi}`, `{phi = psi}`, defect
//! signs, the verifier's conditions — goes through one classification
//! tolerance ([`GameSpec::classification_tolerance`]), so a state cannot
//! be "equal" under one test and "above" under another; inconsistent
//! per-test tolerances are how outer iterations start to oscillate. Over
//! exact scalars the tolerance is zero and the run is a proof.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ctmc::CtmcError;
use crate::resolvent::{defect, GameSpec, ResolventError, StoppingSet};
use crate::scalar::{max_of, sup_distance, Scalar};
use crate::stopping::{
    forward_optimal_stopping, ForbiddenRegion, OnePlayerResult, StoppingError,
};

// ── Errors ──────────────────────────────────────────────────────────────

/// Errors from the game solver and verifier.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError<S: Scalar> {
    /// Propagated one-player failures.
    #[error(transparent)]
    Stopping(#[from] StoppingError<S>),
    /// Propagated resolvent failures.
    #[error(transparent)]
    Resolvent(#[from] ResolventError<S>),
    /// Propagated dimension failures.
    #[error(transparent)]
    Ctmc(#[from] CtmcError<S>),
    /// The outer iteration failed to stabilize within its provable bound.
    /// For consistent classifications this cannot happen; it signals a
    /// tolerance too small for the data (oscillating set membership).
    #[error("outer iteration reached {limit} passes without stabilizing")]
    IterationOverflow { limit: usize },
    /// The verifier's input sets overlap each other or the payoff-contact
    /// set, so the claimed strategy pair is not well-formed.
    #[error("{first} and {second} overlap at states {states:?}")]
    PreconditionViolated {
        first: &'static str,
        second: &'static str,
        states: Vec<usize>,
    },
    /// A classification tolerance must be finite and nonnegative.
    #[error("classification tolerance must be finite and nonnegative, got {0}")]
    InvalidTolerance(S),
}

// ── Initialization mode ─────────────────────────────────────────────────

/// How the minimizer's first candidate set is classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitMode {
    /// `S1 = {V0 > phi} union {phi = psi}`. Smallest valid start; fastest
    /// shrink; the final `inf_stop` may be a strict subset of `{V = phi}`.
    Strict,
    /// `S1 = {V0 >= phi}`. Larger start; the final `inf_stop` recovers
    /// all of `{V = phi}`.
    Weak,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Strict => "strict",
            InitMode::Weak => "weak",
        })
    }
}

/// Unrecognized [`InitMode`] name.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown mode {input:?}, expected \"strict\" or \"weak\"")]
pub struct ParseInitModeError {
    input: String,
}

impl FromStr for InitMode {
    type Err = ParseInitModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("strict") {
            Ok(InitMode::Strict)
        } else if t.eq_ignore_ascii_case("weak") {
            Ok(InitMode::Weak)
        } else {
            Err(ParseInitModeError { input: s.to_string() })
        }
    }
}

// ── Traces and solutions ────────────────────────────────────────────────

/// One outer iteration: the minimizer's candidate set and the maximizer's
/// full best-reply run against it.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterIterate<S> {
    /// The minimizer's set `Sk` this iteration solved against.
    pub inf_set: StoppingSet,
    /// The inner forward run; its `stop_set` is `Dk`, its `value` is `Vk`.
    pub inner: OnePlayerResult<S>,
}

/// Complete record of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct GameTrace<S> {
    /// Initialization mode of this run.
    pub mode: InitMode,
    /// Classification tolerance every set decision used.
    pub tolerance: S,
    /// The unconstrained maximizer run producing `V0`.
    pub v0: OnePlayerResult<S>,
    /// Outer iterations in order; empty when the shortcut fired.
    pub outer: Vec<OuterIterate<S>>,
    /// Total inner sweeps summed over the outer iterations (the
    /// unconstrained `V0` run keeps its own count in `v0.iterations`).
    pub total_inner_steps: usize,
}

/// A solved game.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<S> {
    /// The game value `V`.
    pub value: Vec<S>,
    /// The maximizer's stop set `{V = psi}`.
    pub sup_stop: StoppingSet,
    /// The minimizer's stop set (the stable `Sk`; in weak mode this is
    /// all of `{V = phi}`).
    pub inf_stop: StoppingSet,
    /// True when `{V0 > phi}` was empty and `V = V0` was returned without
    /// any outer iteration.
    pub shortcut_used: bool,
    /// Full iteration record.
    pub trace: GameTrace<S>,
}

impl<S: Scalar> Solution<S> {
    /// Number of outer iterations run (0 under the shortcut).
    pub fn outer_iterations(&self) -> usize {
        self.trace.outer.len()
    }

    /// The Nash strategy pair with the payoff-contact set stripped: the
    /// verifier's conditions distinguish the two players only off
    /// `{phi = psi}`, where it does not matter who stops.
    pub fn nash_pair(&self, spec: &GameSpec<S>) -> (StoppingSet, StoppingSet) {
        let equality = spec.equality_set();
        (
            self.sup_stop.difference(&equality),
            self.inf_stop.difference(&equality),
        )
    }
}

// ── Set classification ──────────────────────────────────────────────────

/// The minimizer's initial candidate set for `v0`, under the spec's own
/// classification tolerance.
pub fn classify_sets<S: Scalar>(
    spec: &GameSpec<S>,
    v0: &[S],
    mode: InitMode,
) -> StoppingSet {
    classify_initial(spec, v0, mode, &spec.classification_tolerance())
}

fn strictly_above_phi<S: Scalar>(spec: &GameSpec<S>, v0: &[S], tol: &S) -> StoppingSet {
    (0..spec.dim())
        .filter(|&x| v0[x].clone() > spec.phi()[x].clone() + tol.clone())
        .collect()
}

fn equality_set_with<S: Scalar>(spec: &GameSpec<S>, tol: &S) -> StoppingSet {
    (0..spec.dim())
        .filter(|&x| (spec.phi()[x].clone() - spec.psi()[x].clone()).abs() <= *tol)
        .collect()
}

fn classify_initial<S: Scalar>(
    spec: &GameSpec<S>,
    v0: &[S],
    mode: InitMode,
    tol: &S,
) -> StoppingSet {
    match mode {
        InitMode::Strict => {
            strictly_above_phi(spec, v0, tol).union(&equality_set_with(spec, tol))
        }
        InitMode::Weak => (0..spec.dim())
            .filter(|&x| v0[x].clone() >= spec.phi()[x].clone() - tol.clone())
            .collect(),
    }
}

// ── The solver ──────────────────────────────────────────────────────────

/// Solve the game under the spec's own classification tolerance.
pub fn solve_game<S: Scalar>(
    spec: &GameSpec<S>,
    mode: InitMode,
) -> Result<Solution<S>, GameError<S>> {
    solve_game_with_tolerance(spec, mode, spec.classification_tolerance())
}

/// Solve the game with an explicit classification tolerance.
pub fn solve_game_with_tolerance<S: Scalar>(
    spec: &GameSpec<S>,
    mode: InitMode,
    tol: S,
) -> Result<Solution<S>, GameError<S>> {
    if !tol.is_finite_value() || tol < S::zero() {
        return Err(GameError::InvalidTolerance(tol));
    }
    let q = spec.generator();
    let beta = spec.beta();
    let n = spec.dim();

    let v0 = forward_optimal_stopping(q, beta, spec.psi(), None, &tol)?;

    // Shortcut: with phi >= V0 everywhere the unconstrained value is
    // already the game value (the minimizer can never gain by stopping),
    // in either mode. Strict classification decides the branch.
    if strictly_above_phi(spec, &v0.value, &tol).is_empty() {
        let inf_stop: StoppingSet = (0..n)
            .filter(|&x| (v0.value[x].clone() - spec.phi()[x].clone()).abs() <= tol)
            .collect();
        let sup_stop = v0.stop_set.clone();
        let value = v0.value.clone();
        return Ok(Solution {
            value,
            sup_stop,
            inf_stop,
            shortcut_used: true,
            trace: GameTrace {
                mode,
                tolerance: tol,
                v0,
                outer: Vec::new(),
                total_inner_steps: 0,
            },
        });
    }

    let equality = equality_set_with(spec, &tol);
    let mut inf_set = classify_initial(spec, &v0.value, mode, &tol);
    let mut outer: Vec<OuterIterate<S>> = Vec::new();
    let mut total_inner_steps = 0usize;

    loop {
        // The stable point arrives in strictly fewer passes than there are
        // states; needing more means set membership is oscillating under
        // the tolerance.
        if outer.len() >= n {
            return Err(GameError::IterationOverflow { limit: n });
        }

        let inner = forward_optimal_stopping(
            q,
            beta,
            spec.psi(),
            Some(ForbiddenRegion {
                set: &inf_set,
                payoff: spec.phi(),
            }),
            &tol,
        )?;
        total_inner_steps += inner.iterations;

        let next = inf_set
            .intersection(&defect(q, beta, &inner.value)?.nonnegative_set(&tol))
            .union(&equality);

        outer.push(OuterIterate {
            inf_set: inf_set.clone(),
            inner,
        });

        if next == inf_set {
            let last = &outer.last().expect("outer loop ran at least once").inner;
            let value = last.value.clone();
            let sup_stop = last.stop_set.union(&equality);
            return Ok(Solution {
                value,
                sup_stop,
                inf_stop: inf_set,
                shortcut_used: false,
                trace: GameTrace {
                    mode,
                    tolerance: tol,
                    v0,
                    outer,
                    total_inner_steps,
                },
            });
        }
        inf_set = next;
    }
}

// ── Equilibrium verification ────────────────────────────────────────────

/// Which condition set applies to a state in the verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionRegion {
    /// In the maximizer's claimed set `A`.
    SupStop,
    /// In the minimizer's claimed set `B`.
    InfStop,
    /// In the payoff-contact set `{phi = psi}` (sandwich check only).
    Equality,
    /// None of the above: the value must be harmonic here.
    Continuation,
}

impl fmt::Display for ConditionRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionRegion::SupStop => "sup-stop",
            ConditionRegion::InfStop => "inf-stop",
            ConditionRegion::Equality => "contact",
            ConditionRegion::Continuation => "continue",
        })
    }
}

/// Per-state ledger row of the verifier.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCondition<S> {
    /// State index.
    pub state: usize,
    /// Which condition set was applied.
    pub region: ConditionRegion,
    /// `Q[V](x) - beta V(x)`.
    pub defect: S,
    /// `V(x) - psi(x)` (sandwich margin below).
    pub value_minus_psi: S,
    /// `phi(x) - V(x)` (sandwich margin above).
    pub phi_minus_value: S,
    /// Whether every applicable condition held within tolerance.
    pub pass: bool,
}

/// Outcome of [`verify_equilibrium`]: a per-state margin ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct NEReport<S> {
    /// One row per state, in state order.
    pub rows: Vec<StateCondition<S>>,
    /// Tolerance the conditions were checked against.
    pub tolerance: S,
    /// True iff every row passed.
    pub pass: bool,
}

impl<S> NEReport<S> {
    /// States whose conditions failed.
    pub fn failing_states(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|row| !row.pass)
            .map(|row| row.state)
            .collect()
    }
}

/// Check whether `(h(A), h(B))` with claimed value `value` is a Nash
/// equilibrium, via the four sufficient conditions:
///
/// 1. on `A`: `Q[V] - beta V <= 0` and `V = psi`;
/// 2. on `B`: `Q[V] - beta V >= 0` and `V = phi`;
/// 3. off `A union B union {phi = psi}`: `Q[V] - beta V = 0`;
/// 4. everywhere: `psi <= V <= phi`;
///
/// all within the spec's classification tolerance. `A` and `B` must be
/// disjoint from each other and from `{phi = psi}`.
pub fn verify_equilibrium<S: Scalar>(
    spec: &GameSpec<S>,
    sup_set: &StoppingSet,
    inf_set: &StoppingSet,
    value: &[S],
) -> Result<NEReport<S>, GameError<S>> {
    let n = spec.dim();
    if value.len() != n {
        return Err(CtmcError::DimensionMismatch {
            got: value.len(),
            expected: n,
        }
        .into());
    }
    let tol = spec.classification_tolerance();
    let equality = spec.equality_set();

    let overlap = sup_set.intersection(inf_set);
    if !overlap.is_empty() {
        return Err(GameError::PreconditionViolated {
            first: "sup-stop set",
            second: "inf-stop set",
            states: overlap.members().to_vec(),
        });
    }
    let sup_contact = sup_set.intersection(&equality);
    if !sup_contact.is_empty() {
        return Err(GameError::PreconditionViolated {
            first: "sup-stop set",
            second: "payoff-contact set",
            states: sup_contact.members().to_vec(),
        });
    }
    let inf_contact = inf_set.intersection(&equality);
    if !inf_contact.is_empty() {
        return Err(GameError::PreconditionViolated {
            first: "inf-stop set",
            second: "payoff-contact set",
            states: inf_contact.members().to_vec(),
        });
    }

    let defects = defect(spec.generator(), spec.beta(), value)?;
    let mut rows = Vec::with_capacity(n);
    let mut pass = true;
    for x in 0..n {
        let d = defects.values()[x].clone();
        let below = value[x].clone() - spec.psi()[x].clone();
        let above = spec.phi()[x].clone() - value[x].clone();
        let sandwich = below >= -tol.clone() && above >= -tol.clone();
        let region;
        let ok = if sup_set.contains(x) {
            region = ConditionRegion::SupStop;
            d <= tol && below.abs() <= tol && sandwich
        } else if inf_set.contains(x) {
            region = ConditionRegion::InfStop;
            d >= -tol.clone() && above.abs() <= tol && sandwich
        } else if equality.contains(x) {
            region = ConditionRegion::Equality;
            sandwich
        } else {
            region = ConditionRegion::Continuation;
            d.abs() <= tol && sandwich
        };
        pass &= ok;
        rows.push(StateCondition {
            state: x,
            region,
            defect: d,
            value_minus_psi: below,
            phi_minus_value: above,
            pass: ok,
        });
    }
    Ok(NEReport {
        rows,
        tolerance: tol,
        pass,
    })
}

/// Verify a [`Solution`] as produced by [`solve_game`]: its Nash pair
/// (payoff-contact states stripped) together with its value.
pub fn verify_solution<S: Scalar>(
    spec: &GameSpec<S>,
    solution: &Solution<S>,
) -> Result<NEReport<S>, GameError<S>> {
    let (sup, inf) = solution.nash_pair(spec);
    verify_equilibrium(spec, &sup, &inf, &solution.value)
}

// ── Mode comparison ─────────────────────────────────────────────────────

/// Side-by-side run of both initializations.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeComparison<S> {
    /// The strict-mode solution.
    pub strict: Solution<S>,
    /// The weak-mode solution.
    pub weak: Solution<S>,
    /// `Sk subseteq weak Sk` and `weak Dk subseteq Dk` at every compared
    /// iteration (sequences are compared at each k, the shorter one
    /// continued by its limit).
    pub containments_hold: bool,
    /// `Vk <= weak Vk` (within tolerance) at every compared iteration.
    pub values_ordered: bool,
    /// Sup-norm distance between the two final values.
    pub value_gap: S,
    /// Whether the two limiting minimizer sets coincide.
    pub limits_equal: bool,
}

/// Run both modes and compare their iterate sequences and outcomes.
///
/// When the shortcut fires the two runs are identical and every
/// comparison holds trivially.
pub fn compare_modes<S: Scalar>(spec: &GameSpec<S>) -> Result<ModeComparison<S>, GameError<S>> {
    let strict = solve_game(spec, InitMode::Strict)?;
    let weak = solve_game(spec, InitMode::Weak)?;
    let tol = spec.classification_tolerance();

    let rounds = strict.trace.outer.len().max(weak.trace.outer.len());
    let mut containments_hold = true;
    let mut values_ordered = true;
    for k in 0..rounds {
        let s = &strict.trace.outer[k.min(strict.trace.outer.len() - 1)];
        let w = &weak.trace.outer[k.min(weak.trace.outer.len() - 1)];
        containments_hold &= s.inf_set.is_subset(&w.inf_set);
        containments_hold &= w.inner.stop_set.is_subset(&s.inner.stop_set);
        values_ordered &= s
            .inner
            .value
            .iter()
            .zip(&w.inner.value)
            .all(|(vs, vw)| vw.clone() >= vs.clone() - tol.clone());
    }

    let value_gap = sup_distance(&strict.value, &weak.value);
    let limits_equal = strict.inf_stop == weak.inf_stop;
    Ok(ModeComparison {
        strict,
        weak,
        containments_hold,
        values_ordered,
        value_gap,
        limits_equal,
    })
}

/// Largest absolute classification margin of a solution against the
/// sandwich bounds; a convenience for reports.
pub fn sandwich_violation<S: Scalar>(spec: &GameSpec<S>, value: &[S]) -> S {
    let mut worst = S::zero();
    for x in 0..spec.dim() {
        let below = spec.psi()[x].clone() - value[x].clone();
        let above = value[x].clone() - spec.phi()[x].clone();
        worst = max_of(worst, max_of(below, above));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::{GeneratorMatrix, StateSpace};
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn set(xs: &[usize]) -> StoppingSet {
        xs.iter().copied().collect()
    }

    fn path_chain(n: usize) -> GeneratorMatrix<f64> {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            -((i > 0) as usize as f64) - ((i + 1 < n) as usize as f64)
                        } else if j + 1 == i || j == i + 1 {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        GeneratorMatrix::from_rows(rows).unwrap()
    }

    /// psi = (10, 4, 2, 1), phi = (12, 8, V0(2), 1): equal limiting sets.
    fn game_equal() -> GameSpec<f64> {
        GameSpec::new(
            StateSpace::indexed(4).unwrap(),
            path_chain(4),
            0.2,
            vec![10.0, 4.0, 2.0, 1.0],
            vec![12.0, 8.0, 1500.0 / 301.0, 1.0],
        )
        .unwrap()
    }

    /// psi = (4, 7, 0, 5), phi = (5, 10, 60/11, 5): different limits.
    fn game_neq() -> GameSpec<f64> {
        GameSpec::new(
            StateSpace::indexed(4).unwrap(),
            path_chain(4),
            0.2,
            vec![4.0, 7.0, 0.0, 5.0],
            vec![5.0, 10.0, 60.0 / 11.0, 5.0],
        )
        .unwrap()
    }

    #[test]
    fn init_mode_parses_and_displays() {
        assert_eq!("strict".parse::<InitMode>().unwrap(), InitMode::Strict);
        assert_eq!(" WEAK ".parse::<InitMode>().unwrap(), InitMode::Weak);
        assert!("medium".parse::<InitMode>().is_err());
        assert_eq!(InitMode::Strict.to_string(), "strict");
    }

    #[test]
    fn classify_sets_on_the_equal_limits_game() {
        let spec = game_equal();
        let v0 = forward_optimal_stopping(
            spec.generator(),
            spec.beta(),
            spec.psi(),
            None,
            &spec.classification_tolerance(),
        )
        .unwrap();
        assert_eq!(classify_sets(&spec, &v0.value, InitMode::Strict), set(&[3]));
        assert_eq!(
            classify_sets(&spec, &v0.value, InitMode::Weak),
            set(&[2, 3])
        );
    }

    #[test]
    fn classify_sets_on_the_different_limits_game() {
        let spec = game_neq();
        let v0 = forward_optimal_stopping(
            spec.generator(),
            spec.beta(),
            spec.psi(),
            None,
            &spec.classification_tolerance(),
        )
        .unwrap();
        assert_eq!(
            classify_sets(&spec, &v0.value, InitMode::Strict),
            set(&[0, 3])
        );
        assert_eq!(
            classify_sets(&spec, &v0.value, InitMode::Weak),
            set(&[0, 2, 3])
        );
    }

    #[test]
    fn strict_solve_on_equal_limits_game() {
        let spec = game_equal();
        let sol = solve_game(&spec, InitMode::Strict).unwrap();
        assert!(!sol.shortcut_used);
        assert_eq!(sol.outer_iterations(), 1);
        assert_eq!(sol.inf_stop, set(&[3]));
        assert_eq!(sol.sup_stop, set(&[0, 3]));
        let expected = [10.0, 575.0 / 96.0, 305.0 / 96.0, 1.0];
        for (v, e) in sol.value.iter().zip(expected) {
            assert!((v - e).abs() < 1e-9);
        }
        assert_eq!(sol.trace.total_inner_steps, 1);
    }

    #[test]
    fn weak_solve_on_equal_limits_game_takes_two_outers() {
        let spec = game_equal();
        let sol = solve_game(&spec, InitMode::Weak).unwrap();
        assert_eq!(sol.outer_iterations(), 2);
        assert_eq!(sol.trace.outer[0].inf_set, set(&[2, 3]));
        assert_eq!(sol.trace.outer[1].inf_set, set(&[3]));
        assert_eq!(sol.inf_stop, set(&[3]));
        let strict = solve_game(&spec, InitMode::Strict).unwrap();
        for (w, s) in sol.value.iter().zip(&strict.value) {
            assert!((w - s).abs() < 1e-9);
        }
    }

    #[test]
    fn both_modes_on_different_limits_game() {
        let spec = game_neq();
        let strict = solve_game(&spec, InitMode::Strict).unwrap();
        assert_eq!(strict.outer_iterations(), 1);
        assert_eq!(strict.inf_stop, set(&[0, 3]));
        assert_eq!(strict.sup_stop, set(&[1, 3]));
        let expected = [5.0, 7.0, 60.0 / 11.0, 5.0];
        for (v, e) in strict.value.iter().zip(expected) {
            assert!((v - e).abs() < 1e-9);
        }

        let weak = solve_game(&spec, InitMode::Weak).unwrap();
        assert_eq!(weak.inf_stop, set(&[0, 2, 3]));
        for (w, s) in weak.value.iter().zip(&strict.value) {
            assert!((w - s).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_arithmetic_solves_the_game_exactly() {
        let e = |v: i64| rat(v, 1);
        let q = GeneratorMatrix::from_rows(vec![
            vec![e(-1), e(1), e(0), e(0)],
            vec![e(1), e(-2), e(1), e(0)],
            vec![e(0), e(1), e(-2), e(1)],
            vec![e(0), e(0), e(1), e(-1)],
        ])
        .unwrap();
        let spec = GameSpec::new(
            StateSpace::indexed(4).unwrap(),
            q,
            rat(1, 5),
            vec![e(4), e(7), e(0), e(5)],
            vec![e(5), e(10), rat(60, 11), e(5)],
        )
        .unwrap();
        let sol = solve_game(&spec, InitMode::Strict).unwrap();
        assert_eq!(sol.value, vec![e(5), e(7), rat(60, 11), e(5)]);
        assert_eq!(sol.inf_stop, set(&[0, 3]));
        assert_eq!(sol.sup_stop, set(&[1, 3]));
    }

    #[test]
    fn shortcut_fires_when_phi_dominates() {
        let spec = GameSpec::new(
            StateSpace::indexed(3).unwrap(),
            path_chain(3),
            0.5,
            vec![1.0, 2.0, 1.5],
            vec![9.0, 9.0, 9.0],
        )
        .unwrap();
        let for_mode = |mode| solve_game(&spec, mode).unwrap();
        let strict = for_mode(InitMode::Strict);
        assert!(strict.shortcut_used);
        assert_eq!(strict.outer_iterations(), 0);
        assert!(strict.inf_stop.is_empty());
        assert_eq!(strict.value, strict.trace.v0.value);
        let weak = for_mode(InitMode::Weak);
        assert_eq!(weak.value, strict.value);
        assert!(weak.shortcut_used);
    }

    #[test]
    fn solver_outputs_verify_as_equilibria() {
        for spec in [game_equal(), game_neq()] {
            for mode in [InitMode::Strict, InitMode::Weak] {
                let sol = solve_game(&spec, mode).unwrap();
                let report = verify_solution(&spec, &sol).unwrap();
                assert!(report.pass, "{mode} failed: {:?}", report.failing_states());
            }
        }
    }

    #[test]
    fn verifier_rejects_non_harmonic_claims() {
        let spec = game_neq();
        // Empty strategy sets force the harmonicity condition everywhere,
        // which psi itself does not satisfy.
        let report = verify_equilibrium(
            &spec,
            &StoppingSet::empty(),
            &StoppingSet::empty(),
            spec.psi(),
        )
        .unwrap();
        assert!(!report.pass);
        assert!(!report.failing_states().is_empty());
    }

    #[test]
    fn verifier_enforces_disjointness_preconditions() {
        let spec = game_neq();
        let err = verify_equilibrium(&spec, &set(&[1]), &set(&[1]), spec.psi()).unwrap_err();
        assert!(matches!(err, GameError::PreconditionViolated { .. }));
        // State 3 is a contact state ({phi = psi}), so it may not appear
        // in either claimed set.
        let err = verify_equilibrium(&spec, &set(&[3]), &set(&[0]), spec.psi()).unwrap_err();
        assert!(matches!(err, GameError::PreconditionViolated { .. }));
    }

    #[test]
    fn compare_modes_reports_limit_equality() {
        let equal = compare_modes(&game_equal()).unwrap();
        assert!(equal.limits_equal);
        assert!(equal.containments_hold);
        assert!(equal.values_ordered);
        assert!(equal.value_gap < 1e-9);

        let neq = compare_modes(&game_neq()).unwrap();
        assert!(!neq.limits_equal);
        assert!(neq.containments_hold);
        assert!(neq.values_ordered);
        assert!(neq.value_gap < 1e-9);
        assert_eq!(neq.strict.inf_stop, set(&[0, 3]));
        assert_eq!(neq.weak.inf_stop, set(&[0, 2, 3]));
    }

    #[test]
    fn monotone_outer_trace_invariants() {
        let spec = game_equal();
        let sol = solve_game(&spec, InitMode::Weak).unwrap();
        for pair in sol.trace.outer.windows(2) {
            assert!(pair[1].inf_set.is_subset(&pair[0].inf_set));
            assert!(pair[0].inner.stop_set.is_subset(&pair[1].inner.stop_set));
            for (later, earlier) in pair[1].inner.value.iter().zip(&pair[0].inner.value) {
                assert!(*later <= earlier + 1e-9);
            }
        }
    }

    #[test]
    fn invalid_tolerance_is_rejected() {
        let spec = game_neq();
        let err = solve_game_with_tolerance(&spec, InitMode::Strict, -1e-9).unwrap_err();
        assert!(matches!(err, GameError::InvalidTolerance(_)));
    }
}
