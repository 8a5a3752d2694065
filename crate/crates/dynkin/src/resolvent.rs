//! Masked resolvent systems: turning stopping sets into discounted values.
//!
//! For a stop set `A`, boundary data `b`, and discount `beta > 0`, the
//! discounted hit value
//!
//! ```text
//!     g(x) = E_x[ exp(-beta h(A)) b(X_{h(A)}) ; h(A) < infinity ]
//! ```
//!
//! (`h(A)` the first entry time into `A`) is the unique solution of
//!
//! ```text
//!     g(x) = b(x)                     for x in A,
//!     Q[g](x) - beta g(x) = 0         for x not in A.
//! ```
//!
//! In matrix form: zero the rows of `Q` on `A` to get `Q'`, then
//! `(Q' - beta I) g = v` with `v = -beta b` on `A` and `0` elsewhere. The
//! matrix `Q' - beta I` is invertible for every `beta > 0`, so the system
//! always has exactly one solution. [`masked_resolvent_solve`] pins the
//! rows on `A` (the returned vector carries `b` there verbatim, bit for
//! bit) and factors only the continuation block.
//!
//! Everything the solver iterates on is built from three pieces defined
//! here: [`StoppingSet`] (canonical sorted index sets), [`GameSpec`] (the
//! validated game data), and [`DefectVector`] (`Q[f] - beta f`, whose sign
//! pattern drives every set update).

use std::fmt;

use thiserror::Error;

use crate::ctmc::{CtmcError, GeneratorMatrix, StateSpace};
use crate::linalg;
use crate::scalar::{max_of, sup_norm, Scalar};

// ── Errors ──────────────────────────────────────────────────────────────

/// Rejected [`GameSpec`] construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError<S: Scalar> {
    /// The state space and generator disagree on the state count.
    #[error("state space has {states} states but generator has {generator}")]
    StateCountMismatch { states: usize, generator: usize },
    /// A payoff vector has the wrong length.
    #[error("{name} has {got} entries, expected {expected}")]
    PayoffDimension {
        name: &'static str,
        got: usize,
        expected: usize,
    },
    /// The discount rate must be positive and finite.
    #[error("discount rate must be positive and finite, got {0}")]
    InvalidDiscount(S),
    /// A payoff entry is NaN or infinite.
    #[error("{name}({state}) is not finite")]
    NonFinitePayoff { name: &'static str, state: usize },
    /// The lower payoff must be nonnegative (exactly; no tolerance).
    #[error("psi({state}) = {value} is negative")]
    NegativeLowerPayoff { state: usize, value: S },
    /// The payoffs must satisfy psi <= phi within the classification
    /// tolerance; violations are rejected, never clamped.
    #[error("psi({state}) = {lower} exceeds phi({state}) = {upper} beyond tolerance")]
    PayoffOrderViolated { state: usize, lower: S, upper: S },
}

/// Errors from masked resolvent solves.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolventError<S: Scalar> {
    /// Propagated dimension or generator failures.
    #[error(transparent)]
    Ctmc(#[from] CtmcError<S>),
    /// The discount rate must be positive and finite.
    #[error("discount rate must be positive and finite, got {0}")]
    NonPositiveDiscount(S),
    /// A stopping set refers to a state outside the chain.
    #[error("state {state} is out of range for a chain on {dim} states")]
    StateOutOfRange { state: usize, dim: usize },
    /// A boundary entry is NaN or infinite.
    #[error("boundary({state}) is not finite")]
    NonFiniteBoundary { state: usize },
    /// The sup and inf stop sets overlap where the payoffs genuinely
    /// differ, so the two boundary conditions contradict each other.
    #[error("stop sets overlap at states {states:?} where psi and phi differ")]
    OverlappingSets { states: Vec<usize> },
    /// The continuation block was numerically singular. Cannot happen for
    /// a valid generator and beta > 0; kept as a defensive signal.
    #[error("masked resolvent system is singular")]
    SingularSystem,
    /// The achieved residual exceeds the acceptance threshold even after
    /// refinement; the input is too ill-conditioned to certify.
    #[error("resolvent residual {residual} exceeds tolerance {tolerance}")]
    SolverFailure { residual: S, tolerance: S },
}

// ── Stopping sets ───────────────────────────────────────────────────────

/// A set of state indices in canonical form: sorted ascending, no
/// duplicates. Equality of two `StoppingSet`s is set equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct StoppingSet {
    members: Vec<usize>,
}

impl StoppingSet {
    /// The empty set.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Canonicalize an index list (sorts and deduplicates).
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self { members }
    }

    /// The full set `{0, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        Self {
            members: (0..n).collect(),
        }
    }

    /// Members in ascending order.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Membership test (binary search).
    pub fn contains(&self, state: usize) -> bool {
        self.members.binary_search(&state).is_ok()
    }

    /// Number of members.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// True when the set has no members.
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Largest member, if any.
    pub fn max_member(&self) -> Option<usize> {
        self.members.last().copied()
    }

    /// Set union.
    pub fn union(&self, other: &Self) -> Self {
        let mut members = self.members.clone();
        members.extend_from_slice(&other.members);
        Self::new(members)
    }

    /// Set intersection.
    pub fn intersection(&self, other: &Self) -> Self {
        Self {
            members: self
                .members
                .iter()
                .copied()
                .filter(|&x| other.contains(x))
                .collect(),
        }
    }

    /// Set difference `self \ other`.
    pub fn difference(&self, other: &Self) -> Self {
        Self {
            members: self
                .members
                .iter()
                .copied()
                .filter(|&x| !other.contains(x))
                .collect(),
        }
    }

    /// Complement within `{0, ..., n-1}`.
    pub fn complement(&self, n: usize) -> Self {
        Self {
            members: (0..n).filter(|&x| !self.contains(x)).collect(),
        }
    }

    /// True when every member of `self` is in `other`.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.members.iter().all(|&x| other.contains(x))
    }

    /// Boolean membership mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &x in &self.members {
            if x < n {
                mask[x] = true;
            }
        }
        mask
    }
}

impl FromIterator<usize> for StoppingSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl fmt::Display for StoppingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

// ── Game specification ──────────────────────────────────────────────────

/// A validated zero-sum stopping game: chain, discount, and the payoff
/// pair `psi <= phi` (lower payoff to the maximizing stopper, upper payoff
/// charged when the minimizer stops first).
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec<S> {
    states: StateSpace,
    generator: GeneratorMatrix<S>,
    beta: S,
    psi: Vec<S>,
    phi: Vec<S>,
}

impl<S: Scalar> GameSpec<S> {
    /// Validate and assemble a game.
    ///
    /// Checks: dimensions agree; `beta` positive and finite; payoffs
    /// finite; `psi >= 0` exactly; `psi <= phi` within the classification
    /// tolerance (violations are rejected, not clamped).
    pub fn new(
        states: StateSpace,
        generator: GeneratorMatrix<S>,
        beta: S,
        psi: Vec<S>,
        phi: Vec<S>,
    ) -> Result<Self, SpecError<S>> {
        let n = states.len();
        if generator.dim() != n {
            return Err(SpecError::StateCountMismatch {
                states: n,
                generator: generator.dim(),
            });
        }
        if psi.len() != n {
            return Err(SpecError::PayoffDimension {
                name: "psi",
                got: psi.len(),
                expected: n,
            });
        }
        if phi.len() != n {
            return Err(SpecError::PayoffDimension {
                name: "phi",
                got: phi.len(),
                expected: n,
            });
        }
        if !beta.is_finite_value() || beta <= S::zero() {
            return Err(SpecError::InvalidDiscount(beta));
        }
        for (state, value) in psi.iter().enumerate() {
            if !value.is_finite_value() {
                return Err(SpecError::NonFinitePayoff { name: "psi", state });
            }
            if *value < S::zero() {
                return Err(SpecError::NegativeLowerPayoff {
                    state,
                    value: value.clone(),
                });
            }
        }
        for (state, value) in phi.iter().enumerate() {
            if !value.is_finite_value() {
                return Err(SpecError::NonFinitePayoff { name: "phi", state });
            }
        }
        let spec = Self {
            states,
            generator,
            beta,
            psi,
            phi,
        };
        let tol = spec.classification_tolerance();
        for state in 0..n {
            if spec.psi[state].clone() > spec.phi[state].clone() + tol.clone() {
                return Err(SpecError::PayoffOrderViolated {
                    state,
                    lower: spec.psi[state].clone(),
                    upper: spec.phi[state].clone(),
                });
            }
        }
        Ok(spec)
    }

    /// The labelled state space.
    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    /// The generator matrix.
    pub fn generator(&self) -> &GeneratorMatrix<S> {
        &self.generator
    }

    /// The discount rate.
    pub fn beta(&self) -> &S {
        &self.beta
    }

    /// Lower payoff vector (the maximizing stopper's reward).
    pub fn psi(&self) -> &[S] {
        &self.psi
    }

    /// Upper payoff vector (charged when the minimizer stops first).
    pub fn phi(&self) -> &[S] {
        &self.phi
    }

    /// Number of states.
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// The single absolute tolerance governing every set-membership
    /// decision on this game:
    ///
    /// ```text
    ///     tol = unit * (1 + max(||psi||, ||phi||, beta * ||phi||))
    /// ```
    ///
    /// with `unit = S::tolerance_unit()` (zero for exact scalars, making
    /// all classifications exact). The `beta * ||phi||` term keeps defect
    /// comparisons, whose natural scale is `beta` times the payoff scale,
    /// under the same umbrella.
    pub fn classification_tolerance(&self) -> S {
        let scale = max_of(
            max_of(sup_norm(&self.psi), sup_norm(&self.phi)),
            self.beta.clone() * sup_norm(&self.phi),
        );
        S::tolerance_unit() * (S::one() + scale)
    }

    /// The payoff-contact set `{x : |phi(x) - psi(x)| <= tol}`. States in
    /// it are simultaneously stop-favorable to both players: stopping
    /// there costs the same no matter who moves.
    pub fn equality_set(&self) -> StoppingSet {
        let tol = self.classification_tolerance();
        (0..self.dim())
            .filter(|&x| (self.phi[x].clone() - self.psi[x].clone()).abs() <= tol)
            .collect()
    }

    /// A copy of this game with `phi` replaced (revalidated in full).
    pub fn with_phi(&self, phi: Vec<S>) -> Result<Self, SpecError<S>> {
        Self::new(
            self.states.clone(),
            self.generator.clone(),
            self.beta.clone(),
            self.psi.clone(),
            phi,
        )
    }
}

// ── Defect vectors ──────────────────────────────────────────────────────

/// The defect `Q[f] - beta f`. Its sign at a state classifies the state:
/// nonpositive means `f` is excessive there (stopping is locally sound for
/// the maximizer), nonnegative means deficient (sound for the minimizer),
/// zero means harmonic (continue).
#[derive(Debug, Clone, PartialEq)]
pub struct DefectVector<S> {
    values: Vec<S>,
}

impl<S: Scalar> DefectVector<S> {
    /// Entry values in state order.
    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Consume into the raw vector.
    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    /// `{x : defect(x) <= tol}`.
    pub fn nonpositive_set(&self, tol: &S) -> StoppingSet {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v <= *tol)
            .map(|(x, _)| x)
            .collect()
    }

    /// `{x : defect(x) >= -tol}`.
    pub fn nonnegative_set(&self, tol: &S) -> StoppingSet {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v >= -tol.clone())
            .map(|(x, _)| x)
            .collect()
    }
}

/// The defect vector `Q[f] - beta f`.
pub fn defect<S: Scalar>(
    q: &GeneratorMatrix<S>,
    beta: &S,
    f: &[S],
) -> Result<DefectVector<S>, CtmcError<S>> {
    let qf = q.apply(f)?;
    Ok(DefectVector {
        values: qf
            .into_iter()
            .zip(f)
            .map(|(qfx, fx)| qfx - beta.clone() * fx.clone())
            .collect(),
    })
}

// ── Masked resolvent solve ──────────────────────────────────────────────

/// Solve the masked resolvent system for a stop set and boundary data.
///
/// Returns `g` with `g = boundary` **exactly** (bit for bit) on
/// `stop_set` and `Q[g] - beta g = 0` on the complement; this is the
/// discounted expectation of `boundary` at the first entry into
/// `stop_set`, with the convention that never hitting pays zero. The
/// empty stop set therefore returns the zero vector, and the full stop
/// set returns `boundary` itself.
///
/// After assembly the full-system residual is measured on the
/// continuation rows; if it exceeds `unit * (1 + max|boundary|)` even
/// after iterative refinement the solve is rejected with
/// [`ResolventError::SolverFailure`] rather than returning an
/// uncertified vector.
pub fn masked_resolvent_solve<S: Scalar>(
    q: &GeneratorMatrix<S>,
    beta: &S,
    stop_set: &StoppingSet,
    boundary: &[S],
) -> Result<Vec<S>, ResolventError<S>> {
    let n = q.dim();
    if !beta.is_finite_value() || *beta <= S::zero() {
        return Err(ResolventError::NonPositiveDiscount(beta.clone()));
    }
    if boundary.len() != n {
        return Err(CtmcError::DimensionMismatch {
            got: boundary.len(),
            expected: n,
        }
        .into());
    }
    if let Some(state) = stop_set.max_member() {
        if state >= n {
            return Err(ResolventError::StateOutOfRange { state, dim: n });
        }
    }
    for (state, value) in boundary.iter().enumerate() {
        if !value.is_finite_value() {
            return Err(ResolventError::NonFiniteBoundary { state });
        }
    }

    let stopped = stop_set.mask(n);
    let continuation: Vec<usize> = (0..n).filter(|&x| !stopped[x]).collect();
    let m = continuation.len();

    // Reduced continuation system: for row x in the continuation set,
    //   sum_{y cont} Q(x,y) g(y) - beta g(x) = -sum_{s stop} Q(x,s) b(s).
    let mut a = Vec::with_capacity(m * m);
    let mut rhs = Vec::with_capacity(m);
    for &x in &continuation {
        for &y in &continuation {
            let mut entry = q.entry(x, y).clone();
            if x == y {
                entry -= beta.clone();
            }
            a.push(entry);
        }
        let mut acc = S::zero();
        for (s, is_stop) in stopped.iter().enumerate() {
            if *is_stop {
                acc += q.entry(x, s).clone() * boundary[s].clone();
            }
        }
        rhs.push(-acc);
    }

    let (g_cont, _) =
        linalg::solve_refined(m, &a, &rhs).ok_or(ResolventError::SingularSystem)?;

    // Assemble: boundary rows are pinned verbatim, never recomputed.
    let mut g = boundary.to_vec();
    for (value, &x) in g_cont.into_iter().zip(&continuation) {
        g[x] = value;
    }

    // Certify the full system on the continuation rows.
    let qg = q.apply(&g)?;
    let mut residual = S::zero();
    for &x in &continuation {
        let r = (qg[x].clone() - beta.clone() * g[x].clone()).abs();
        residual = max_of(residual, r);
    }
    let tolerance = S::tolerance_unit() * (S::one() + sup_norm(boundary));
    if residual > tolerance {
        return Err(ResolventError::SolverFailure {
            residual,
            tolerance,
        });
    }
    Ok(g)
}

/// Evaluate the hitting-strategy payoff `R_x(h(B), h(C))`: the maximizer
/// stops on first entry to `B` (collecting `psi`), the minimizer on first
/// entry to `C` (paying `phi`), ties go to the maximizer.
///
/// Overlap between `B` and `C` is tolerated exactly where it is harmless:
/// on states with `|phi - psi| <= tol` both boundary conditions agree, and
/// the tie rule assigns `psi` there. Overlap anywhere else is rejected as
/// [`ResolventError::OverlappingSets`].
pub fn hitting_payoff<S: Scalar>(
    spec: &GameSpec<S>,
    sup_set: &StoppingSet,
    inf_set: &StoppingSet,
) -> Result<Vec<S>, ResolventError<S>> {
    let tol = spec.classification_tolerance();
    let overlap = sup_set.intersection(inf_set);
    let bad: Vec<usize> = overlap
        .members()
        .iter()
        .copied()
        .filter(|&x| {
            x < spec.dim()
                && (spec.phi()[x].clone() - spec.psi()[x].clone()).abs() > tol
        })
        .collect();
    if !bad.is_empty() {
        return Err(ResolventError::OverlappingSets { states: bad });
    }

    let stop = sup_set.union(inf_set);
    let mut boundary = vec![S::zero(); spec.dim()];
    for &x in inf_set.members() {
        if x < spec.dim() {
            boundary[x] = spec.phi()[x].clone();
        }
    }
    // The maximizer's payoff wins ties, so write it second.
    for &x in sup_set.members() {
        if x < spec.dim() {
            boundary[x] = spec.psi()[x].clone();
        }
    }
    masked_resolvent_solve(spec.generator(), spec.beta(), &stop, &boundary)
}
