//! Independent cross-checks for the forward solver: a fixed-point
//! iteration on the uniformized chain, brute-force strategy enumeration,
//! and Monte Carlo simulation of hitting payoffs. None of them share
//! machinery with the solver beyond the spec itself, which is what makes
//! an agreement between them evidence rather than tautology.
//!
//! # Why the uniformized fixed point is the game value
//!
//! Uniformize at rate `L >= max_x |Q(x,x)|` (taking `L = 1` for the
//! all-absorbing chain), so `P = I + Q/L` is a stochastic matrix, and set
//! `alpha = L / (L + beta)`. Then
//!
//! ```text
//!     alpha P = (L I + Q) / (L + beta),
//! ```
//!
//! so for any vector `W`:
//!
//! ```text
//!     alpha P W <= W   <=>   L W + Q W <= (L + beta) W   <=>   Q W <= beta W,
//! ```
//!
//! and likewise with `>=` and `=`. The operator
//!
//! ```text
//!     T[W] = min(phi, max(psi, alpha P W))
//! ```
//!
//! is therefore the discrete-time Bellman operator of a game whose
//! excessive/deficient regions coincide with the continuous-time ones,
//! and its unique fixed point (T is an `alpha`-contraction in sup norm,
//! `alpha < 1`) satisfies exactly the variational conditions of the game
//! value: `psi <= V <= phi`, `Q[V] = beta V` off the contact sets, with
//! the correct one-sided inequalities on them. Dropping the `min(phi, .)`
//! clamp yields the one-player (pure stopping) value the same way.
//!
//! The iteration reports its full residual history so callers can check
//! the contraction certificate — each sweep shrinking the residual by at
//! least the factor `alpha` — rather than trust the stopping rule blindly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ctmc::{CtmcError, GeneratorMatrix, StateSpace};
use crate::game::{verify_equilibrium, GameError, NEReport};
use crate::resolvent::{GameSpec, ResolventError, SpecError, StoppingSet};
use crate::scalar::{max_of, sup_distance, Scalar};

/// Largest state count [`enumerate_equilibria`] accepts by default; the
/// assignment space grows as `3^n`.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 7;

// ── Errors ──────────────────────────────────────────────────────────────

/// Errors from the oracle layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError<S: Scalar> {
    /// Propagated spec/solve failures.
    #[error(transparent)]
    Resolvent(#[from] ResolventError<S>),
    /// Propagated dimension failures.
    #[error(transparent)]
    Ctmc(#[from] CtmcError<S>),
    /// Propagated spec construction failures.
    #[error(transparent)]
    Spec(#[from] SpecError<S>),
    /// Propagated verifier failures.
    #[error(transparent)]
    Game(#[from] GameError<S>),
    /// The fixed-point iteration did not meet its residual target.
    #[error("value iteration hit {max_iter} sweeps with residual {residual} still above target")]
    MaxIterExceeded { max_iter: usize, residual: S },
    /// Enumeration refused a state space too large for `3^n` assignments.
    #[error("enumeration over {n} states exceeds the limit of {limit}")]
    TooManyStates { n: usize, limit: usize },
    /// A payoff-modification region left the open band between the payoffs.
    #[error(
        "state {state} has value {value}, not strictly inside ({lower}, {upper})"
    )]
    SubsetViolation {
        state: usize,
        value: S,
        lower: S,
        upper: S,
    },
    /// A start state beyond the state space.
    #[error("start state {state} out of range for {dim} states")]
    StateOutOfRange { state: usize, dim: usize },
    /// Simulation needs at least one path.
    #[error("simulation requires at least one path")]
    NoPaths,
    /// Iteration tolerances must be finite and nonnegative.
    #[error("tolerance must be finite and nonnegative, got {0}")]
    InvalidTolerance(S),
    /// Simulation horizons must be positive and finite.
    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
}

// ── Value iteration ─────────────────────────────────────────────────────

/// A completed fixed-point run with its convergence evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueIterationRun<S> {
    /// The final iterate.
    pub values: Vec<S>,
    /// Sup-norm step sizes `||W_{n+1} - W_n||`, one per sweep.
    pub residuals: Vec<S>,
    /// Number of sweeps performed (` = residuals.len()`).
    pub iterations: usize,
    /// The contraction factor `L / (L + beta)` of the operator.
    pub alpha: S,
}

impl<S: Scalar> ValueIterationRun<S> {
    /// Check the contraction certificate over the last `window` sweeps:
    /// each residual at most `alpha` times its predecessor, up to one
    /// tolerance unit of rounding slack.
    pub fn decay_certified(&self, window: usize) -> bool {
        let n = self.residuals.len();
        if n < 2 {
            return true;
        }
        let first = n.saturating_sub(window.max(2));
        let fuzz = S::tolerance_unit();
        self.residuals[first..]
            .windows(2)
            .all(|pair| pair[1] <= self.alpha.clone() * pair[0].clone() + fuzz.clone())
    }
}

fn vi_core<S: Scalar>(
    q: &GeneratorMatrix<S>,
    beta: &S,
    psi: &[S],
    phi: Option<&[S]>,
    tol: &S,
    max_iter: usize,
) -> Result<ValueIterationRun<S>, OracleError<S>> {
    if !tol.is_finite_value() || *tol < S::zero() {
        return Err(OracleError::InvalidTolerance(tol.clone()));
    }
    let chain = q.uniformized(S::zero())?;
    let rate = chain.rate().clone();
    let alpha = rate.clone() / (rate.clone() + beta.clone());
    // The a-priori bound ||W_n - V|| <= alpha/(1-alpha) ||W_n - W_{n-1}||
    // turns a residual below tol * (1-alpha)/alpha = tol * beta/L into a
    // guaranteed sup-norm error below tol.
    let target = tol.clone() * beta.clone() / rate;

    let mut current = psi.to_vec();
    let mut residuals = Vec::new();
    for _ in 0..max_iter {
        let reached = chain.apply(&current)?;
        let next: Vec<S> = (0..current.len())
            .map(|x| {
                let mut w = max_of(psi[x].clone(), alpha.clone() * reached[x].clone());
                if let Some(phi) = phi {
                    if w > phi[x] {
                        w = phi[x].clone();
                    }
                }
                w
            })
            .collect();
        let step = sup_distance(&next, &current);
        residuals.push(step.clone());
        current = next;
        if step <= target {
            let iterations = residuals.len();
            return Ok(ValueIterationRun {
                values: current,
                residuals,
                iterations,
                alpha,
            });
        }
    }
    Err(OracleError::MaxIterExceeded {
        max_iter,
        residual: residuals.last().cloned().unwrap_or_else(S::zero),
    })
}

/// Fixed-point iteration for the two-player value, returning the full run.
///
/// Over exact scalars pass a positive rational tolerance; a zero
/// tolerance demands an exact fixed point, which the iteration only
/// reaches in degenerate cases.
pub fn value_iteration_run<S: Scalar>(
    spec: &GameSpec<S>,
    tol: &S,
    max_iter: usize,
) -> Result<ValueIterationRun<S>, OracleError<S>> {
    vi_core(
        spec.generator(),
        spec.beta(),
        spec.psi(),
        Some(spec.phi()),
        tol,
        max_iter,
    )
}

/// Fixed-point iteration for the two-player value, returning only the
/// final iterate (guaranteed within `tol` of the value in sup norm).
pub fn value_iteration<S: Scalar>(
    spec: &GameSpec<S>,
    tol: &S,
    max_iter: usize,
) -> Result<Vec<S>, OracleError<S>> {
    value_iteration_run(spec, tol, max_iter).map(|run| run.values)
}

/// Fixed-point iteration for the one-player (pure stopping) value: the
/// same operator without the upper clamp.
pub fn one_player_value_iteration<S: Scalar>(
    q: &GeneratorMatrix<S>,
    beta: &S,
    psi: &[S],
    tol: &S,
    max_iter: usize,
) -> Result<ValueIterationRun<S>, OracleError<S>> {
    vi_core(q, beta, psi, None, tol, max_iter)
}

// ── Strategy enumeration ────────────────────────────────────────────────

/// One strategy pair that survived verification.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCandidate<S> {
    /// The maximizer's stop set `A`.
    pub sup_set: StoppingSet,
    /// The minimizer's stop set `B` (contact states excluded).
    pub inf_set: StoppingSet,
    /// The resulting hitting payoff.
    pub value: Vec<S>,
    /// The verifier's full ledger for the pair.
    pub report: NEReport<S>,
}

/// Try every assignment of non-contact states to {maximizer stops,
/// minimizer stops, neither} and keep the pairs whose hitting payoff
/// passes the equilibrium verifier. Exhaustive, hence exponential: state
/// spaces above `max_states` are refused.
///
/// The returned list is never empty for a valid spec — the game value's
/// own pair is among the assignments — and all surviving values agree
/// with each other up to verification tolerance.
pub fn enumerate_equilibria<S: Scalar>(
    spec: &GameSpec<S>,
    max_states: usize,
) -> Result<Vec<EquilibriumCandidate<S>>, OracleError<S>> {
    let n = spec.dim();
    if n > max_states {
        return Err(OracleError::TooManyStates {
            n,
            limit: max_states,
        });
    }
    let equality = spec.equality_set();
    let free: Vec<usize> = equality.complement(n).members().to_vec();
    let mut assignment = vec![0u8; free.len()];
    let mut found = Vec::new();
    loop {
        let mut sup = Vec::new();
        let mut inf = Vec::new();
        for (slot, &x) in assignment.iter().zip(&free) {
            match slot {
                1 => sup.push(x),
                2 => inf.push(x),
                _ => {}
            }
        }
        let sup_set: StoppingSet = sup.into_iter().collect();
        let inf_set: StoppingSet = inf.into_iter().collect();
        let value =
            crate::resolvent::hitting_payoff(spec, &sup_set, &inf_set.union(&equality))?;
        let report = verify_equilibrium(spec, &sup_set, &inf_set, &value)?;
        if report.pass {
            found.push(EquilibriumCandidate {
                sup_set,
                inf_set,
                value,
                report,
            });
        }

        // Odometer over the ternary assignment vector.
        let mut idx = 0;
        loop {
            if idx == assignment.len() {
                return Ok(found);
            }
            assignment[idx] += 1;
            if assignment[idx] < 3 {
                break;
            }
            assignment[idx] = 0;
            idx += 1;
        }
    }
}

// ── Monte Carlo simulation ──────────────────────────────────────────────

/// Knobs for [`simulate_hitting_payoff`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Number of independent paths.
    pub paths: usize,
    /// Base RNG seed; path `i` runs on stream `i` of this seed.
    pub seed: u64,
    /// Truncation horizon; `None` picks one whose discounted tail is
    /// below `1e-4` (reported in the estimate's bias bound either way).
    pub horizon: Option<f64>,
    /// Multiplier on the standard error when checking consistency.
    pub confidence_z: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            paths: 10_000,
            seed: 0,
            horizon: None,
            confidence_z: 3.0,
        }
    }
}

/// A Monte Carlo estimate with its uncertainty decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffEstimate {
    /// Sample mean of the discounted payoff.
    pub mean: f64,
    /// Sample standard deviation divided by `sqrt(paths)` (zero when only
    /// one path ran).
    pub stderr: f64,
    /// Deterministic truncation bias bound `exp(-beta T) * max phi`.
    pub bias_bound: f64,
    /// Number of paths actually simulated.
    pub paths_used: usize,
}

impl PayoffEstimate {
    /// Whether `exact` lies within `z` standard errors plus the bias
    /// bound of the sample mean.
    pub fn consistent_with(&self, exact: f64, z: f64) -> bool {
        (exact - self.mean).abs() <= z * self.stderr + self.bias_bound
    }
}

/// Estimate the discounted hitting payoff from `start` by simulating the
/// jump chain: `psi` is collected on first entry to `sup_set`, `phi` on
/// first entry to `inf_set` (ties pay `psi`), discounted by the arrival
/// time; paths that are absorbed outside both sets or outlive the horizon
/// contribute zero.
///
/// Estimates are bit-reproducible for a given seed: path `i` draws from
/// `ChaCha8` stream `i`, independent of path ordering.
pub fn simulate_hitting_payoff(
    spec: &GameSpec<f64>,
    sup_set: &StoppingSet,
    inf_set: &StoppingSet,
    start: usize,
    config: &SimulationConfig,
) -> Result<PayoffEstimate, OracleError<f64>> {
    let n = spec.dim();
    if start >= n {
        return Err(OracleError::StateOutOfRange { state: start, dim: n });
    }
    if config.paths == 0 {
        return Err(OracleError::NoPaths);
    }
    // Overlap is only a conflict where the two payoffs actually differ.
    let tol = spec.classification_tolerance();
    let conflicted: Vec<usize> = sup_set
        .intersection(inf_set)
        .members()
        .iter()
        .copied()
        .filter(|&x| (spec.psi()[x] - spec.phi()[x]).abs() > tol)
        .collect();
    if !conflicted.is_empty() {
        return Err(ResolventError::OverlappingSets { states: conflicted }.into());
    }

    let beta = *spec.beta();
    let max_phi = spec.phi().iter().cloned().fold(0.0_f64, f64::max);
    let horizon = match config.horizon {
        Some(t) => {
            if !(t.is_finite() && t > 0.0) {
                return Err(OracleError::InvalidHorizon(t));
            }
            t
        }
        None => (max_phi.max(1.0) / 1e-4).ln() / beta,
    };
    let bias_bound = (-beta * horizon).exp() * max_phi;

    let q = spec.generator();
    let mut sum = 0.0_f64;
    let mut sum_sq = 0.0_f64;
    for path in 0..config.paths {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(path as u64);
        let mut x = start;
        let mut t = 0.0_f64;
        let payoff = loop {
            if sup_set.contains(x) {
                break (-beta * t).exp() * spec.psi()[x];
            }
            if inf_set.contains(x) {
                break (-beta * t).exp() * spec.phi()[x];
            }
            let rate = -*q.entry(x, x);
            if rate <= 0.0 {
                break 0.0; // absorbed outside both sets
            }
            let u_hold: f64 = rng.gen();
            t += -(1.0 - u_hold).ln() / rate;
            if t > horizon {
                break 0.0;
            }
            let u_jump: f64 = rng.gen::<f64>() * rate;
            let mut cumulative = 0.0_f64;
            let mut next = x;
            for y in 0..n {
                if y == x {
                    continue;
                }
                let r = *q.entry(x, y);
                if r > 0.0 {
                    next = y; // guards the u_jump ~ rate rounding edge
                    cumulative += r;
                    if cumulative >= u_jump {
                        break;
                    }
                }
            }
            x = next;
        };
        sum += payoff;
        sum_sq += payoff * payoff;
    }

    let paths = config.paths as f64;
    let mean = sum / paths;
    let stderr = if config.paths > 1 {
        let variance = (sum_sq - sum * sum / paths) / (paths - 1.0);
        (variance.max(0.0) / paths).sqrt()
    } else {
        0.0
    };
    Ok(PayoffEstimate {
        mean,
        stderr,
        bias_bound,
        paths_used: config.paths,
    })
}

// ── Payoff modification ─────────────────────────────────────────────────

/// Lower the upper payoff onto the value on `region` and return the
/// modified spec. Each state of `region` must lie strictly inside the
/// open band `(psi + tol, phi - tol)` at `value`; re-solving the modified
/// game reproduces `value`, which is the invariance this helper exists to
/// let callers test.
pub fn construct_phi_c<S: Scalar>(
    spec: &GameSpec<S>,
    value: &[S],
    region: &StoppingSet,
) -> Result<GameSpec<S>, OracleError<S>> {
    let n = spec.dim();
    if value.len() != n {
        return Err(CtmcError::DimensionMismatch {
            got: value.len(),
            expected: n,
        }
        .into());
    }
    if let Some(max) = region.max_member() {
        if max >= n {
            return Err(OracleError::StateOutOfRange { state: max, dim: n });
        }
    }
    let tol = spec.classification_tolerance();
    for &x in region.members() {
        let lower = spec.psi()[x].clone() + tol.clone();
        let upper = spec.phi()[x].clone() - tol.clone();
        if !(value[x] > lower && value[x] < upper) {
            return Err(OracleError::SubsetViolation {
                state: x,
                value: value[x].clone(),
                lower,
                upper,
            });
        }
    }
    let mut phi = spec.phi().to_vec();
    for &x in region.members() {
        phi[x] = value[x].clone();
    }
    Ok(spec.with_phi(phi)?)
}

// ── Random instances ────────────────────────────────────────────────────

/// Draw a random valid spec: sparse rates in `[0, 2)`, lower payoff in
/// `[0, 10)`, an upper payoff gap that is exactly zero a quarter of the
/// time and otherwise in `(0, 4)`, and a discount in `[0.05, 1.5)`.
pub fn sample_game_spec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GameSpec<f64> {
    assert!(n > 0, "state space must be non-empty");
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = vec![0.0_f64; n];
        let mut exit = 0.0_f64;
        for (j, slot) in row.iter_mut().enumerate() {
            if j != i && rng.gen::<f64>() < 0.6 {
                let rate = rng.gen_range(0.0..2.0);
                *slot = rate;
                exit += rate;
            }
        }
        row[i] = -exit;
        rows.push(row);
    }
    let generator = GeneratorMatrix::from_rows(rows).expect("rows balanced by construction");

    let psi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
    let phi: Vec<f64> = psi
        .iter()
        .map(|&p| {
            if rng.gen::<f64>() < 0.25 {
                p
            } else {
                p + rng.gen_range(0.0..4.0)
            }
        })
        .collect();
    let beta = rng.gen_range(0.05..1.5);

    GameSpec::new(
        StateSpace::indexed(n).expect("n > 0"),
        generator,
        beta,
        psi,
        phi,
    )
    .expect("sampled data satisfies the spec invariants by construction")
}
