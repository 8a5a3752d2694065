//! Randomized structural properties of the solver stack. Every property
//! here is a theorem about the exact quantities; the assertions allow
//! only the documented numerical slack, so a failure is either a rounding
//! regression or a real defect, never an expected flake.

use num_rational::BigRational;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dynkin::scalar::sup_distance;
use dynkin::{
    compare_modes, defect, enumerate_equilibria, forward_optimal_stopping, hitting_payoff,
    masked_resolvent_solve, sample_game_spec, solve_game, value_iteration_run, verify_solution,
    GameSpec, GeneratorMatrix, InitMode, Scalar, Solution, StateSpace, StoppingSet,
};

/// A random valid spec, sized and seeded by the strategy inputs.
fn sampled_spec(max_n: usize) -> impl Strategy<Value = GameSpec<f64>> {
    (2usize..=max_n, any::<u64>())
        .prop_map(|(n, seed)| sample_game_spec(n, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// A random spec plus a random disjoint pair of state sets.
fn spec_with_disjoint_sets(
    max_n: usize,
) -> impl Strategy<Value = (GameSpec<f64>, StoppingSet, StoppingSet)> {
    (2usize..=max_n, any::<u64>(), any::<u64>()).prop_map(|(n, seed, set_seed)| {
        let spec = sample_game_spec(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut rng = ChaCha8Rng::seed_from_u64(set_seed);
        let mut sup = Vec::new();
        let mut inf = Vec::new();
        for x in 0..n {
            match rng.gen_range(0..3) {
                1 => sup.push(x),
                2 => inf.push(x),
                _ => {}
            }
        }
        (
            spec,
            sup.into_iter().collect(),
            inf.into_iter().collect(),
        )
    })
}

/// Random nonnegative boundary data for resolvent properties.
fn boundary(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0.0..10.0)).collect()
}

/// Random subset of `0..n` drawn from a seeded coin.
fn subset(seed: u64, n: usize, p: f64) -> StoppingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).filter(|_| rng.gen::<f64>() < p).collect()
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Uniformization always yields a stochastic matrix.
    #[test]
    fn uniformized_chain_is_stochastic(spec in sampled_spec(10), slack in 0.0_f64..2.0) {
        let chain = spec.generator().uniformized(slack).unwrap();
        for x in 0..chain.dim() {
            let row = chain.row(x);
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12, "row {x} sums to {sum}");
            for (y, p) in row.iter().enumerate() {
                prop_assert!(*p >= -1e-15, "negative probability {p} at ({x}, {y})");
            }
        }
    }

    /// Stopping everywhere returns the boundary verbatim; stopping
    /// nowhere returns the zero vector (never stopping pays nothing).
    #[test]
    fn full_and_empty_masks_are_trivial(spec in sampled_spec(10), seed in any::<u64>()) {
        let n = spec.dim();
        let b = boundary(seed, n);
        let full = masked_resolvent_solve(
            spec.generator(), spec.beta(), &StoppingSet::full(n), &b,
        ).unwrap();
        prop_assert_eq!(full, b.clone());
        let empty = masked_resolvent_solve(
            spec.generator(), spec.beta(), &StoppingSet::empty(), &b,
        ).unwrap();
        prop_assert!(empty.iter().all(|v| *v == 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Raising the boundary data can only raise the solution: the solve
    /// is an expectation of the boundary under a sub-probability measure.
    #[test]
    fn masked_solve_is_monotone_in_the_boundary(
        spec in sampled_spec(10),
        seed in any::<u64>(),
        bump_seed in any::<u64>(),
        set_seed in any::<u64>(),
    ) {
        let n = spec.dim();
        let stop = subset(set_seed, n, 0.5);
        let low = boundary(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(bump_seed);
        let high: Vec<f64> = low.iter().map(|v| v + rng.gen_range(0.0..5.0)).collect();
        let g_low = masked_resolvent_solve(spec.generator(), spec.beta(), &stop, &low).unwrap();
        let g_high = masked_resolvent_solve(spec.generator(), spec.beta(), &stop, &high).unwrap();
        for (lo, hi) in g_low.iter().zip(&g_high) {
            prop_assert!(*lo <= hi + 1e-9, "monotonicity violated: {lo} > {hi}");
        }
    }

    /// Absorbing on a superset of an already-absorbed solution changes
    /// nothing: stopping a stopped process is a no-op.
    #[test]
    fn absorbing_twice_is_absorbing_once(
        spec in sampled_spec(10),
        seed in any::<u64>(),
        inner_seed in any::<u64>(),
        outer_seed in any::<u64>(),
    ) {
        let n = spec.dim();
        let small = subset(inner_seed, n, 0.4);
        let large = small.union(&subset(outer_seed, n, 0.4));
        let f = boundary(seed, n);
        let once = masked_resolvent_solve(spec.generator(), spec.beta(), &small, &f).unwrap();
        let twice = masked_resolvent_solve(spec.generator(), spec.beta(), &large, &once).unwrap();
        let gap = sup_distance(&once, &twice);
        prop_assert!(gap <= 1e-9 * (1.0 + max_abs(&f)), "composition gap {gap}");
    }

    /// Adding the payoff-contact states to the maximizer's set never
    /// changes a hitting payoff when the minimizer already owns them:
    /// whoever stops there pays the same amount.
    #[test]
    fn contact_states_change_no_hitting_payoff(
        (spec, sup, inf) in spec_with_disjoint_sets(10),
    ) {
        let contact = spec.equality_set();
        let lhs = hitting_payoff(&spec, &sup.union(&contact), &inf.union(&contact)).unwrap();
        let rhs = hitting_payoff(&spec, &sup, &inf.union(&contact)).unwrap();
        let gap = sup_distance(&lhs, &rhs);
        prop_assert!(gap <= 1e-9, "contact-absorption gap {gap}");
    }

    /// Shape of an unconstrained forward run: the candidate sets shrink,
    /// the iterate values grow, the lower payoff is pinned bitwise on the
    /// final set, the defect has the right sign everywhere, and the
    /// global argmax of the payoff is always retained.
    #[test]
    fn forward_run_has_the_documented_structure(spec in sampled_spec(10)) {
        let tol = spec.classification_tolerance();
        let run = forward_optimal_stopping(
            spec.generator(), spec.beta(), spec.psi(), None, &tol,
        ).unwrap();

        prop_assert!(run.iterations >= 1);
        prop_assert!(run.iterations <= spec.dim() + 1);
        for pair in run.trace.windows(2) {
            prop_assert!(pair[1].set.is_subset(&pair[0].set));
            for (later, earlier) in pair[1].value.iter().zip(&pair[0].value) {
                prop_assert!(*later >= earlier - tol);
            }
        }
        for &x in run.stop_set.members() {
            prop_assert!(run.value[x] == spec.psi()[x], "stop value not pinned at {x}");
        }
        for v in &run.value {
            prop_assert!(*v >= -tol);
        }

        let defects = defect(spec.generator(), spec.beta(), &run.value).unwrap();
        for x in 0..spec.dim() {
            let d = defects.values()[x];
            if run.stop_set.contains(x) {
                prop_assert!(d <= tol, "positive defect {d} on the stop set at {x}");
            } else {
                prop_assert!(d.abs() <= tol, "non-harmonic continuation at {x}: {d}");
            }
        }

        let argmax = (0..spec.dim())
            .max_by(|&a, &b| spec.psi()[a].total_cmp(&spec.psi()[b]))
            .unwrap();
        prop_assert!(run.stop_set.contains(argmax), "argmax {argmax} not retained");
    }
}

/// Every trace- and solution-level invariant of a finished game solve.
fn check_solution_invariants(
    spec: &GameSpec<f64>,
    sol: &Solution<f64>,
) -> Result<(), TestCaseError> {
    let n = spec.dim();
    let tol = spec.classification_tolerance();
    let contact = spec.equality_set();
    let v0 = &sol.trace.v0;

    // Iteration budgets.
    prop_assert!(sol.outer_iterations() < n.max(1), "outer count reached |E|");
    let above: StoppingSet = (0..n)
        .filter(|&x| v0.value[x] > spec.phi()[x] + tol)
        .collect();
    prop_assert!(
        sol.outer_iterations() <= above.len() + 1,
        "outer count {} exceeds |{{V0 > phi}}| + 1 = {}",
        sol.outer_iterations(),
        above.len() + 1
    );
    prop_assert!(
        sol.trace.total_inner_steps <= n * n,
        "total inner steps {} exceed |E|^2",
        sol.trace.total_inner_steps
    );

    // Monotone trace with the sandwich on every completed iterate.
    for record in &sol.trace.outer {
        for x in 0..n {
            let v = record.inner.value[x];
            prop_assert!(v >= spec.psi()[x] - tol, "iterate below psi at {x}");
            prop_assert!(v <= spec.phi()[x] + tol, "iterate above phi at {x}");
            prop_assert!(v <= v0.value[x] + tol, "iterate above V0 at {x}");
        }
    }
    for pair in sol.trace.outer.windows(2) {
        prop_assert!(pair[1].inf_set.is_subset(&pair[0].inf_set));
        prop_assert!(pair[0].inner.stop_set.is_subset(&pair[1].inner.stop_set));
        for (later, earlier) in pair[1].inner.value.iter().zip(&pair[0].inner.value) {
            prop_assert!(*later <= earlier + tol);
        }
    }
    for record in &sol.trace.outer {
        prop_assert!(contact.is_subset(&record.inf_set), "contact set escaped Sk");
    }

    // Structure of the final iterate.
    let defects = defect(spec.generator(), spec.beta(), &sol.value).unwrap();
    let sup_core = sol.sup_stop.difference(&contact);
    let inf_core = sol.inf_stop.difference(&contact);
    for x in 0..n {
        let d = defects.values()[x];
        if sup_core.contains(x) {
            prop_assert!(d <= tol);
            prop_assert!(sol.value[x] == spec.psi()[x], "psi not pinned at {x}");
        } else if inf_core.contains(x) {
            prop_assert!(d >= -tol);
            if !sol.shortcut_used {
                prop_assert!(sol.value[x] == spec.phi()[x], "phi not pinned at {x}");
            } else {
                prop_assert!((sol.value[x] - spec.phi()[x]).abs() <= tol);
            }
        } else if !contact.contains(x) {
            prop_assert!(d.abs() <= tol, "non-harmonic continuation at {x}: {d}");
        }
    }

    // Set relations of the solution.
    prop_assert!(sol.sup_stop.intersection(&inf_core).is_empty());
    prop_assert!(v0.stop_set.is_subset(&sol.sup_stop), "{{V0 = psi}} escaped sup_stop");

    // The maximizer's set is reachable: every recurrent class meets it.
    let decomposition = spec.generator().class_decomposition();
    for class in decomposition.recurrent_classes() {
        prop_assert!(
            class.states.iter().any(|&x| sol.sup_stop.contains(x)),
            "recurrent class {:?} never stops",
            class.states
        );
    }

    // And the whole thing verifies as a Nash equilibrium.
    let report = verify_solution(spec, sol).unwrap();
    prop_assert!(report.pass, "verifier failed at {:?}", report.failing_states());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// All documented invariants hold on random instances, both modes.
    #[test]
    fn game_solutions_satisfy_every_invariant(spec in sampled_spec(10)) {
        for mode in [InitMode::Strict, InitMode::Weak] {
            let sol = solve_game(&spec, mode).unwrap();
            check_solution_invariants(&spec, &sol)?;
        }
    }

    /// The two initializations bracket each other iterate by iterate and
    /// agree on the value.
    #[test]
    fn modes_bracket_each_other(spec in sampled_spec(10)) {
        let cmp = compare_modes(&spec).unwrap();
        prop_assert!(cmp.containments_hold);
        prop_assert!(cmp.values_ordered);
        prop_assert!(cmp.value_gap <= 1e-8, "value gap {}", cmp.value_gap);
        prop_assert!(cmp.strict.inf_stop.is_subset(&cmp.weak.inf_stop));
    }

    /// The solver agrees with the independent fixed-point oracle, and the
    /// oracle's own convergence certificate holds.
    #[test]
    fn fixed_point_oracle_agrees(spec in sampled_spec(10)) {
        let sol = solve_game(&spec, InitMode::Strict).unwrap();
        let run = value_iteration_run(&spec, &1e-8, 400_000).unwrap();
        let gap = sup_distance(&sol.value, &run.values);
        prop_assert!(gap <= 1e-7, "solver vs fixed point gap {gap}");
        prop_assert!(run.decay_certified(10), "contraction certificate failed");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// On small spaces, brute force over all strategy pairs finds the
    /// solver's pair and every surviving pair carries the same value.
    #[test]
    fn enumeration_brackets_the_solver(spec in sampled_spec(4)) {
        let candidates = enumerate_equilibria(&spec, 4).unwrap();
        prop_assert!(!candidates.is_empty(), "no equilibrium survived enumeration");
        let sol = solve_game(&spec, InitMode::Strict).unwrap();
        let (a, b) = sol.nash_pair(&spec);
        prop_assert!(
            candidates.iter().any(|c| c.sup_set == a && c.inf_set == b),
            "solver pair ({a}, {b}) missing"
        );
        for candidate in &candidates {
            let gap = sup_distance(&candidate.value, &sol.value);
            prop_assert!(gap <= 1e-9, "candidate value off by {gap}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Exact rational arithmetic reproduces the floating-point value; the
    /// exact run is a proof, so agreement certifies the float run.
    #[test]
    fn exact_arithmetic_agrees_with_float(spec in sampled_spec(4)) {
        let n = spec.dim();
        let rows: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                let mut row: Vec<BigRational> = (0..n)
                    .map(|j| BigRational::from_f64(*spec.generator().entry(i, j)))
                    .collect();
                let off_sum: BigRational = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| row[j].clone())
                    .sum();
                row[i] = -off_sum;
                row
            })
            .collect();
        let exact = GameSpec::new(
            StateSpace::indexed(n).unwrap(),
            GeneratorMatrix::from_rows(rows).unwrap(),
            BigRational::from_f64(*spec.beta()),
            spec.psi().iter().map(|v| BigRational::from_f64(*v)).collect(),
            spec.phi().iter().map(|v| BigRational::from_f64(*v)).collect(),
        )
        .unwrap();

        let float_sol = solve_game(&spec, InitMode::Strict).unwrap();
        let exact_sol = solve_game(&exact, InitMode::Strict).unwrap();
        let report = verify_solution(&exact, &exact_sol).unwrap();
        prop_assert!(report.pass, "exact verification failed");
        for (rational, float) in exact_sol.value.iter().zip(&float_sol.value) {
            let gap = (rational.to_f64() - float).abs();
            prop_assert!(gap <= 1e-8, "exact vs float gap {gap}");
        }
    }
}
