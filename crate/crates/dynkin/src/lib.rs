//! Solver for discounted zero-sum stopping games on finite-state
//! continuous-time Markov chains.
//!
//! Two players watch a chain with generator `Q`. The maximizer stops at
//! `tau` to collect `psi(X_tau)`, the minimizer stops at `gamma` to pay
//! `phi(X_gamma)`, whichever comes first, discounted at rate `beta`;
//! ties pay the maximizer and never stopping pays nothing. For bounded
//! payoffs with `0 <= psi <= phi` and `beta > 0` the game has a value
//! achieved by hitting times of two stop sets, and everything in this
//! crate is about computing those sets exactly and proving them right:
//!
//! - [`ctmc`]: state spaces, validated generator matrices, uniformization,
//!   communicating-class decomposition;
//! - [`resolvent`]: the masked resolvent solve (kill the chain on a stop
//!   set, solve `(Q' - beta I) g = -beta . boundary`), defect vectors
//!   `Q[f] - beta f`, hitting payoffs, and the problem description
//!   ([`GameSpec`]) with its validation;
//! - [`stopping`]: the one-player forward algorithm — grow nothing, shrink
//!   a candidate stop set through resolvent solves until it is stable;
//! - [`game`]: the two-player solver nesting the forward algorithm inside
//!   a shrinking outer iteration, with full traces, an equilibrium
//!   verifier, and a strict/weak initialization comparison;
//! - [`oracle`]: independent cross-checks (uniformized fixed-point
//!   iteration, exhaustive strategy enumeration, Monte Carlo simulation)
//!   plus helpers for building adversarial test instances.
//!
//! All numerics are generic over [`Scalar`]: `f64`/`f32` for floating
//! point and [`Rational`] for exact arithmetic, where every comparison
//! tolerance collapses to zero and a solve is a proof. Convenience
//! aliases fix the two common choices: [`GameSpec64`]/[`Solution64`] and
//! [`GameSpecExact`]/[`SolutionExact`].
//!
//! ```
//! use dynkin::{GameSpec, GeneratorMatrix, InitMode, StateSpace};
//!
//! // A three-state birth-death chain; stop payoffs pinch at state 2.
//! let q = GeneratorMatrix::from_rows(vec![
//!     vec![-1.0, 1.0, 0.0],
//!     vec![1.0, -2.0, 1.0],
//!     vec![0.0, 1.0, -1.0],
//! ])
//! .unwrap();
//! let spec = GameSpec::new(
//!     StateSpace::indexed(3).unwrap(),
//!     q,
//!     0.5,
//!     vec![4.0, 1.0, 3.0],
//!     vec![6.0, 5.0, 3.0],
//! )
//! .unwrap();
//! let solution = dynkin::solve_game(&spec, InitMode::Strict).unwrap();
//! let report = dynkin::verify_solution(&spec, &solution).unwrap();
//! assert!(report.pass);
//! ```

mod linalg;

pub mod ctmc;
pub mod game;
pub mod oracle;
pub mod resolvent;
pub mod scalar;
pub mod stopping;

pub use ctmc::{
    ClassDecomposition, CommClass, CtmcError, GeneratorMatrix, GeneratorViolation, StateSpace,
    StateSpaceError, UniformizedChain,
};
pub use game::{
    classify_sets, compare_modes, solve_game, solve_game_with_tolerance, verify_equilibrium,
    verify_solution, ConditionRegion, GameError, GameTrace, InitMode, ModeComparison, NEReport,
    OuterIterate, ParseInitModeError, Solution, StateCondition,
};
pub use oracle::{
    construct_phi_c, enumerate_equilibria, one_player_value_iteration, sample_game_spec,
    simulate_hitting_payoff, value_iteration, value_iteration_run, EquilibriumCandidate,
    OracleError, PayoffEstimate, SimulationConfig, ValueIterationRun,
    DEFAULT_ENUMERATION_LIMIT,
};
pub use resolvent::{
    defect, hitting_payoff, masked_resolvent_solve, DefectVector, GameSpec, ResolventError,
    SpecError, StoppingSet,
};
pub use scalar::Scalar;
pub use stopping::{
    forward_optimal_stopping, ForbiddenRegion, OnePlayerResult, StoppingError, StoppingIterate,
};

/// Exact rational scalar: arbitrary-precision numerator and denominator.
pub type Rational = num_rational::BigRational;

/// Problem description over `f64`.
pub type GameSpec64 = GameSpec<f64>;
/// Problem description over exact rationals.
pub type GameSpecExact = GameSpec<Rational>;
/// Solution over `f64`.
pub type Solution64 = Solution<f64>;
/// Solution over exact rationals.
pub type SolutionExact = Solution<Rational>;
