//! The one-player forward algorithm for discounted optimal stopping.
//!
//! Given a chain `Q`, discount `beta > 0`, and reward `psi >= 0`, the
//! problem is
//!
//! ```text
//!     V0(x) = sup_tau E_x[ exp(-beta tau) psi(X_tau) ; tau < infinity ],
//! ```
//!
//! whose solution is the smallest beta-excessive majorant of `psi`
//! (`Q[V0] - beta V0 <= 0` and `V0 >= psi`), stopped optimally on
//! `{V0 = psi}`. The forward algorithm discovers that set from the
//! outside in:
//!
//! ```text
//!     C1      = { Q[psi] - beta psi <= 0 }            (locally sound stops)
//!     V(n)    = discounted hit value of Cn, boundary psi
//!     Cn+1    = Cn intersect { Q[V(n)] - beta V(n) <= 0 }
//! ```
//!
//! stopping at the first `n` with `Cn+1 = Cn`. Each non-final sweep
//! strictly shrinks `Cn`, so at most `|C1| + 1` resolvent solves run, the
//! values `V(n)` increase to `V0`, and the final `Cn` IS `{V0 = psi}` (the
//! algorithm reports the set it iterated on rather than re-deriving it by
//! numeric comparison, which could misclassify boundary states).
//!
//! A [`ForbiddenRegion`] turns the same loop into the constrained problem
//! `sup_tau R_x(tau, h(F))` where the opponent stops at the first entry to
//! a fixed set `F` with payoff `phi`: candidate sets are kept disjoint
//! from `F` (`C1 = { Q[psi] - beta psi <= 0 } \ F`) and every solve uses
//! boundary `psi` on `Cn`, `phi` on `F`. The two-player solver calls this
//! once per outer iteration.

use thiserror::Error;

use crate::ctmc::{CtmcError, GeneratorMatrix};
use crate::resolvent::{defect, masked_resolvent_solve, ResolventError, StoppingSet};
use crate::scalar::Scalar;

// ── Errors ──────────────────────────────────────────────────────────────

/// Errors from the forward algorithm.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoppingError<S: Scalar> {
    /// Propagated resolvent failures.
    #[error(transparent)]
    Resolvent(#[from] ResolventError<S>),
    /// Propagated dimension failures.
    #[error(transparent)]
    Ctmc(#[from] CtmcError<S>),
    /// The reward must be nonnegative (exactly; the convention that never
    /// stopping pays zero makes negative rewards meaningless).
    #[error("psi({state}) = {value} is negative")]
    NonNegativityViolation { state: usize, value: S },
}

// ── Result types ────────────────────────────────────────────────────────

/// One sweep of the forward loop: the candidate stop set it solved on and
/// the value it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingIterate<S> {
    /// The candidate stop set `Cn` of this sweep.
    pub set: StoppingSet,
    /// The value solved with stop set `Cn` (union the forbidden region).
    pub value: Vec<S>,
}

/// Output of [`forward_optimal_stopping`].
#[derive(Debug, Clone, PartialEq)]
pub struct OnePlayerResult<S> {
    /// The optimal value; equals `psi` exactly on `stop_set` because the
    /// final solve pinned it there.
    pub value: Vec<S>,
    /// The optimal stopping set: the final (stable) `Cn`.
    pub stop_set: StoppingSet,
    /// Every sweep in order; `value` and `stop_set` repeat its last entry.
    pub trace: Vec<StoppingIterate<S>>,
    /// Number of sweeps, `= trace.len()`; at most `|C1| + 1`.
    pub iterations: usize,
}

/// A region where the opponent has already committed to stop, with the
/// payoff charged there.
#[derive(Debug, Clone, Copy)]
pub struct ForbiddenRegion<'a, S> {
    /// States the candidate stop sets must avoid.
    pub set: &'a StoppingSet,
    /// Full-length payoff vector; only entries on `set` are read.
    pub payoff: &'a [S],
}

// ── The forward loop ────────────────────────────────────────────────────

/// Run the forward algorithm.
///
/// With `forbidden = None` this solves the pure problem and returns
/// `(V0, {V0 = psi})`. With a forbidden region `F` it returns the
/// constrained value `sup_tau R_x(tau, h(F))` and the maximizer's optimal
/// set against that fixed opponent.
///
/// `tol` is the classification tolerance used for every defect-sign test;
/// pass zero (what exact scalars' `tolerance_unit` gives) for exact
/// comparisons.
pub fn forward_optimal_stopping<S: Scalar>(
    q: &GeneratorMatrix<S>,
    beta: &S,
    psi: &[S],
    forbidden: Option<ForbiddenRegion<'_, S>>,
    tol: &S,
) -> Result<OnePlayerResult<S>, StoppingError<S>> {
    let n = q.dim();
    if psi.len() != n {
        return Err(CtmcError::DimensionMismatch {
            got: psi.len(),
            expected: n,
        }
        .into());
    }
    for (state, value) in psi.iter().enumerate() {
        if *value < S::zero() {
            return Err(StoppingError::NonNegativityViolation {
                state,
                value: value.clone(),
            });
        }
    }
    if let Some(region) = &forbidden {
        if region.payoff.len() != n {
            return Err(CtmcError::DimensionMismatch {
                got: region.payoff.len(),
                expected: n,
            }
            .into());
        }
        if let Some(state) = region.set.max_member() {
            if state >= n {
                return Err(ResolventError::StateOutOfRange { state, dim: n }.into());
            }
        }
    }

    let empty = StoppingSet::empty();
    let forbidden_set = forbidden.as_ref().map_or(&empty, |region| region.set);

    // C1: states where psi is itself excessive, minus the forbidden region.
    let mut candidate = defect(q, beta, psi)?
        .nonpositive_set(tol)
        .difference(forbidden_set);

    let mut trace: Vec<StoppingIterate<S>> = Vec::new();
    loop {
        let stop = candidate.union(forbidden_set);
        let mut boundary = vec![S::zero(); n];
        if let Some(region) = &forbidden {
            for &x in region.set.members() {
                boundary[x] = region.payoff[x].clone();
            }
        }
        for &x in candidate.members() {
            boundary[x] = psi[x].clone();
        }

        let value = masked_resolvent_solve(q, beta, &stop, &boundary)?;
        let next = candidate.intersection(&defect(q, beta, &value)?.nonpositive_set(tol));
        trace.push(StoppingIterate {
            set: candidate.clone(),
            value: value.clone(),
        });
        if next == candidate {
            let iterations = trace.len();
            return Ok(OnePlayerResult {
                value,
                stop_set: candidate,
                trace,
                iterations,
            });
        }
        // `next` is a strict subset here, so the loop must terminate
        // within |C1| + 1 sweeps.
        debug_assert!(next.len() < candidate.len());
        candidate = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::GeneratorMatrix;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn set(xs: &[usize]) -> StoppingSet {
        xs.iter().copied().collect()
    }

    /// Birth-death chain on {0,..,n-1} with all rates 1.
    fn path_chain(n: usize) -> GeneratorMatrix<f64> {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            let mut d = 0.0;
                            if i > 0 {
                                d -= 1.0;
                            }
                            if i + 1 < n {
                                d -= 1.0;
                            }
                            d
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

    #[test]
    fn constants_stop_everywhere_in_one_sweep() {
        let q = path_chain(4);
        let r = forward_optimal_stopping(&q, &0.2, &[3.0; 4], None, &1e-9).unwrap();
        assert_eq!(r.value, vec![3.0; 4]);
        assert_eq!(r.stop_set, StoppingSet::full(4));
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn four_state_descending_reward() {
        // psi = (10, 4, 2, 1), beta = 0.2: only state 0 is locally sound,
        // and the hit value of {0} is already excessive.
        let q = path_chain(4);
        let r =
            forward_optimal_stopping(&q, &0.2, &[10.0, 4.0, 2.0, 1.0], None, &1e-9).unwrap();
        assert_eq!(r.stop_set, set(&[0]));
        assert_eq!(r.iterations, 1);
        assert_eq!(r.value[0], 10.0);
        let expected = [10.0, 6.8106, 4.9834, 4.1528];
        for (v, e) in r.value.iter().zip(expected) {
            assert!((v - e).abs() < 5e-5);
        }
        assert!((r.value[1] - 2050.0 / 301.0).abs() < 1e-9);
    }

    #[test]
    fn four_state_mixed_reward() {
        let q = path_chain(4);
        let r =
            forward_optimal_stopping(&q, &0.2, &[4.0, 7.0, 0.0, 5.0], None, &1e-9).unwrap();
        assert_eq!(r.stop_set, set(&[1, 3]));
        assert!((r.value[0] - 35.0 / 6.0).abs() < 1e-9);
        assert_eq!(r.value[1], 7.0);
        assert!((r.value[2] - 60.0 / 11.0).abs() < 1e-9);
        assert_eq!(r.value[3], 5.0);
    }

    #[test]
    fn exact_mode_reproduces_the_rationals() {
        let e = |v: i64| rat(v, 1);
        let q = GeneratorMatrix::from_rows(vec![
            vec![e(-1), e(1), e(0), e(0)],
            vec![e(1), e(-2), e(1), e(0)],
            vec![e(0), e(1), e(-2), e(1)],
            vec![e(0), e(0), e(1), e(-1)],
        ])
        .unwrap();
        let psi = vec![e(4), e(7), e(0), e(5)];
        let r = forward_optimal_stopping(&q, &rat(1, 5), &psi, None, &rat(0, 1)).unwrap();
        assert_eq!(
            r.value,
            vec![rat(35, 6), rat(7, 1), rat(60, 11), rat(5, 1)]
        );
        assert_eq!(r.stop_set, set(&[1, 3]));
    }

    #[test]
    fn shrinking_candidate_set_takes_two_sweeps() {
        // psi = (0, 5, 4.9, 100), beta = 0.05 on the 4-path: C1 = {1, 3},
        // but the hit value of {3} alone already dominates 5 at state 1,
        // so the first sweep evicts state 1.
        let q = path_chain(4);
        let r = forward_optimal_stopping(&q, &0.05, &[0.0, 5.0, 4.9, 100.0], None, &1e-9)
            .unwrap();
        assert_eq!(r.iterations, 2);
        assert_eq!(r.trace[0].set, set(&[1, 3]));
        assert_eq!(r.trace[1].set, set(&[3]));
        assert_eq!(r.stop_set, set(&[3]));
        // Hand solution of the final system.
        assert!((r.value[0] - 800000.0 / 10501.0).abs() < 1e-9);
        assert!((r.value[1] - 840000.0 / 10501.0).abs() < 1e-9);
        assert!((r.value[2] - 922000.0 / 10501.0).abs() < 1e-9);
        assert_eq!(r.value[3], 100.0);
        // The trace values increase sweep over sweep.
        for (lo, hi) in r.trace[0].value.iter().zip(&r.trace[1].value) {
            assert!(lo <= hi);
        }
    }

    #[test]
    fn forbidden_region_constrains_the_maximizer() {
        // The opponent stops on {0, 3} paying phi = (5, ., ., 5): the
        // maximizer keeps only {1} and the value caps at the hit payoff.
        let q = path_chain(4);
        let phi = vec![5.0, 10.0, 60.0 / 11.0, 5.0];
        let forbidden = set(&[0, 3]);
        let r = forward_optimal_stopping(
            &q,
            &0.2,
            &[4.0, 7.0, 0.0, 5.0],
            Some(ForbiddenRegion {
                set: &forbidden,
                payoff: &phi,
            }),
            &1e-9,
        )
        .unwrap();
        assert_eq!(r.stop_set, set(&[1]));
        assert_eq!(r.value[0], 5.0);
        assert_eq!(r.value[1], 7.0);
        assert!((r.value[2] - 60.0 / 11.0).abs() < 1e-9);
        assert_eq!(r.value[3], 5.0);
    }

    #[test]
    fn fully_forbidden_chain_returns_the_forbidden_payoff() {
        let q = path_chain(3);
        let phi = vec![2.0, 3.0, 4.0];
        let forbidden = StoppingSet::full(3);
        let r = forward_optimal_stopping(
            &q,
            &0.5,
            &[1.0, 1.0, 1.0],
            Some(ForbiddenRegion {
                set: &forbidden,
                payoff: &phi,
            }),
            &1e-9,
        )
        .unwrap();
        assert_eq!(r.value, phi);
        assert!(r.stop_set.is_empty());
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn negative_reward_is_rejected() {
        let q = path_chain(2);
        let err =
            forward_optimal_stopping(&q, &0.2, &[1.0, -0.5], None, &1e-9).unwrap_err();
        assert!(matches!(
            err,
            StoppingError::NonNegativityViolation { state: 1, .. }
        ));
    }

    #[test]
    fn value_is_pinned_to_psi_on_the_stop_set() {
        let q = path_chain(4);
        let psi = [10.0, 4.0, 2.0, 1.0];
        let r = forward_optimal_stopping(&q, &0.2, &psi, None, &1e-9).unwrap();
        for &x in r.stop_set.members() {
            assert!(r.value[x].to_bits() == psi[x].to_bits());
        }
    }
}
