//! Invariant and property suites over seeded random models, checked
//! against a brute-force oracle where one is available.

mod common;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ssg_core::bellman::{bellman_update, deflate_update};
use ssg_core::format::{parse_model, serialize_model};
use ssg_core::graph::{
    all_reachable_from_initial, best_exit, classify_states, find_sec_candidates,
    forced_zero_states, mec_decomposition, scc_decomposition,
};
use ssg_core::model::{induced_markov_chain, MaxStrategy, MinStrategy, Player, SsgModel, StateId};
use ssg_core::solvers::{solve_bvi, solve_ovi, solve_si, SolverConfig, SolverStatus};
use ssg_core::value::ValueFunction;

/// Direct check of the end-component definition: the witness actions
/// must stay inside and make the set strongly connected.
fn is_ec(model: &SsgModel, states: &BTreeSet<StateId>) -> bool {
    let witness: Vec<(StateId, Vec<usize>)> = states
        .iter()
        .map(|&s| {
            let staying = (0..model.actions(s).len())
                .filter(|&a| {
                    model.actions(s)[a]
                        .distribution
                        .support()
                        .all(|t| states.contains(&t))
                })
                .collect();
            (s, staying)
        })
        .collect();
    if witness.iter().all(|(_, acts)| acts.is_empty()) {
        return false;
    }
    // Strong connectivity under the witness actions via repeated BFS.
    for &start in states {
        let mut seen = BTreeSet::from([start]);
        let mut queue = vec![start];
        while let Some(v) = queue.pop() {
            let acts = &witness.iter().find(|(s, _)| *s == v).unwrap().1;
            for &a in acts {
                for t in model.actions(v)[a].distribution.support() {
                    if seen.insert(t) {
                        queue.push(t);
                    }
                }
            }
        }
        if seen.len() != states.len() {
            return false;
        }
        if states.len() == 1 {
            let acts = &witness[0].1;
            if acts.is_empty() {
                return false;
            }
        }
    }
    true
}

#[test]
fn partition_and_topology_hold_on_random_models() {
    for seed in 0..60u64 {
        let model = common::medium_model(seed);
        let classes = classify_states(&model);
        assert_eq!(
            classes.goals().len() + classes.sinks().len() + classes.unknown().len(),
            model.num_states()
        );
        let scc = scc_decomposition(&model);
        for s in model.states() {
            for a in 0..model.actions(s).len() {
                for t in model.post(s, a).unwrap() {
                    assert!(scc.rank_of(s) <= scc.rank_of(t), "seed {seed}");
                }
            }
        }
        let sizes: usize = scc.components().iter().map(|c| c.len()).sum();
        assert_eq!(sizes, model.num_states());
    }
}

#[test]
fn mecs_are_sound_maximal_and_disjoint() {
    for seed in 0..60u64 {
        let model = common::small_model(seed);
        let mecs = mec_decomposition(&model);
        for (i, mec) in mecs.iter().enumerate() {
            assert!(is_ec(&model, &mec.states), "seed {seed} not an EC");
            // Witness actions stay inside.
            for (&s, acts) in &mec.actions {
                assert!(!acts.is_empty());
                for &a in acts {
                    assert!(model.actions(s)[a]
                        .distribution
                        .support()
                        .all(|t| mec.states.contains(&t)));
                }
            }
            for other in mecs.iter().skip(i + 1) {
                assert!(mec.states.is_disjoint(&other.states), "seed {seed}");
            }
            // Maximality: adding any adjacent state breaks the EC.
            let mut adjacent = BTreeSet::new();
            for &s in &mec.states {
                for a in 0..model.actions(s).len() {
                    for t in model.post(s, a).unwrap() {
                        if !mec.states.contains(&t) {
                            adjacent.insert(t);
                        }
                    }
                }
            }
            for t in adjacent {
                let mut extended = mec.states.clone();
                extended.insert(t);
                assert!(!is_ec(&model, &extended), "seed {seed} not maximal");
            }
        }
    }
}

#[test]
fn sec_candidates_from_exact_values_are_secs() {
    let mut checked = 0;
    for seed in 0..60u64 {
        let model = common::small_model(seed);
        let classes = classify_states(&model);
        let value = common::oracle_value(&model);
        for candidate in find_sec_candidates(&model, &classes, &value) {
            for &s in &candidate.states {
                let exit = best_exit(&model, &candidate.states, &value);
                assert!(
                    (value[s] - exit).abs() <= 1e-9,
                    "seed {seed} state {s}: value {} vs best exit {exit}",
                    value[s]
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 0, "no SEC candidate was ever produced");
}

#[test]
fn bellman_improves_lower_bounds_below_value() {
    for seed in 0..40u64 {
        let model = common::small_model(seed);
        let classes = classify_states(&model);
        let value = common::oracle_value(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb177);
        for _ in 0..10 {
            let lower = ValueFunction::from_vec(
                model
                    .states()
                    .map(|s| value[s] * rng.random::<f64>())
                    .collect(),
            );
            let next = bellman_update(&model, &classes, &lower, false);
            assert!(next.in_unit_interval());
            for s in model.states() {
                assert!(next[s] <= value[s] + 1e-9, "seed {seed} state {s}");
            }
        }
    }
}

#[test]
fn deflate_stays_below_bellman_and_above_value() {
    for seed in 0..40u64 {
        let model = common::small_model(seed);
        let classes = classify_states(&model);
        let value = common::oracle_value(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdef1a7e);
        for _ in 0..10 {
            let upper = ValueFunction::from_vec(
                model
                    .states()
                    .map(|s| value[s] + (1.0 - value[s]) * rng.random::<f64>())
                    .collect(),
            );
            let lower = ValueFunction::from_vec(
                model
                    .states()
                    .map(|s| value[s] * rng.random::<f64>())
                    .collect(),
            );
            let deflated = deflate_update(&model, &classes, &upper, &lower, false);
            let plain = bellman_update(&model, &classes, &upper, false);
            for s in model.states() {
                assert!(deflated[s] <= plain[s], "deflate exceeded bellman");
                assert!(
                    deflated[s] >= value[s] - 1e-9,
                    "seed {seed} state {s}: deflated {} below value {}",
                    deflated[s],
                    value[s]
                );
            }
        }
    }
}

#[test]
fn synchronous_and_gauss_seidel_reach_same_fixpoint() {
    for seed in 0..20u64 {
        let model = common::small_model(seed);
        let classes = classify_states(&model);
        let mut sync = ValueFunction::zeros(model.num_states());
        let mut gs = ValueFunction::zeros(model.num_states());
        for &g in model.goals() {
            sync[g] = 1.0;
            gs[g] = 1.0;
        }
        for _ in 0..20_000 {
            sync = bellman_update(&model, &classes, &sync, false);
            gs = bellman_update(&model, &classes, &gs, true);
        }
        for s in model.states() {
            assert!((sync[s] - gs[s]).abs() <= 1e-9, "seed {seed} state {s}");
        }
    }
}

#[test]
fn induced_chain_rows_are_distributions_for_random_strategies() {
    for seed in 0..30u64 {
        let model = common::small_model(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x517a7e);
        let mut sigma = MaxStrategy::new();
        let mut tau = MinStrategy::new();
        for s in model.states() {
            let count = model.actions(s).len();
            match model.owner(s) {
                Player::Maximizer => {
                    let mut support: Vec<usize> =
                        (0..count).filter(|_| rng.random::<bool>()).collect();
                    if support.is_empty() {
                        support.push(rng.random_range(0..count));
                    }
                    sigma.set(s, support);
                }
                Player::Minimizer => tau.set(s, rng.random_range(0..count)),
            }
        }
        let chain = induced_markov_chain(&model, &sigma, &tau).unwrap();
        for row in &chain.rows {
            assert_eq!(row.sum(), 1.0);
            assert!(row.entries().iter().all(|&(_, p)| p > 0.0));
            let targets: Vec<_> = row.support().collect();
            let unique: BTreeSet<_> = targets.iter().collect();
            assert_eq!(unique.len(), targets.len());
        }
    }
}

#[test]
fn round_trip_identity_on_random_models() {
    for seed in 100..160u64 {
        let model = common::medium_model(seed);
        let text = serialize_model(&model);
        let parsed = parse_model(&text).unwrap();
        assert_eq!(parsed, model, "seed {seed}");
        assert_eq!(serialize_model(&parsed), text, "seed {seed}");
    }
}

#[test]
fn generators_produce_valid_reachable_models() {
    for seed in 0..50u64 {
        let model = common::medium_model(seed);
        assert!(model.validate().is_ok(), "seed {seed}");
        assert!(all_reachable_from_initial(&model), "seed {seed}");
    }
}

#[test]
fn bounded_solvers_sandwich_the_exact_value() {
    let cfg = SolverConfig::default();
    for seed in 0..40u64 {
        let model = common::medium_model(seed);
        let classes = classify_states(&model);
        let exact = solve_si(&model, &classes, &cfg, None).unwrap();
        assert_eq!(exact.status, SolverStatus::Precise);
        let bvi = solve_bvi(&model, &classes, &cfg).unwrap();
        assert_eq!(bvi.status, SolverStatus::Converged, "seed {seed}");
        let ovi = solve_ovi(&model, &classes, &cfg).unwrap();
        assert_eq!(ovi.status, SolverStatus::Converged, "seed {seed}");
        for s in model.states() {
            let v = exact.lower[s];
            assert!(bvi.lower[s] <= v + 1e-9 && v - 1e-9 <= bvi.upper[s], "seed {seed}");
            assert!(ovi.lower[s] <= v + 1e-9 && v - 1e-9 <= ovi.upper[s], "seed {seed}");
            assert!(bvi.upper[s] - bvi.lower[s] <= cfg.epsilon);
        }
    }
}

#[test]
fn default_generation_is_highly_connected() {
    use ssg_core::analysis::{aggregate_features, compute_features};
    use ssg_core::generate::{generate_random, GenParams};
    let reports: Vec<_> = (0..200u64)
        .map(|seed| {
            let model = generate_random(&GenParams::new(30, seed)).unwrap();
            compute_features(&model)
        })
        .collect();
    let stats = aggregate_features(&reports).unwrap();
    // biggest_scc_pct is feature index 14.
    let avg_biggest_scc = stats.stats[14].mean;
    assert!(avg_biggest_scc >= 0.5, "average biggest SCC {avg_biggest_scc}");
}

#[test]
fn feature_bounds_hold_on_random_models() {
    use ssg_core::analysis::compute_features;
    for seed in 0..40u64 {
        let model = common::medium_model(seed);
        let r = compute_features(&model);
        assert!(r.num_non_singleton_sccs <= r.num_sccs);
        if r.num_non_singleton_sccs > 0 {
            assert!(r.biggest_scc_pct >= r.avg_scc_non_sing_pct, "seed {seed}");
        }
        for pct in [
            r.sinks_pct,
            r.unknown_pct,
            r.min_states_pct,
            r.prob_actions_pct,
            r.biggest_mec_pct,
            r.avg_mec_pct,
            r.biggest_scc_pct,
            r.avg_scc_pct,
            r.avg_scc_non_sing_pct,
        ] {
            assert!((0.0..=1.0).contains(&pct), "seed {seed}");
        }
    }
}

#[test]
fn relative_mode_converges_with_the_same_guarantees() {
    use ssg_core::value::{diff, DiffMode};
    let cfg = SolverConfig {
        mode: DiffMode::Relative,
        ..SolverConfig::default()
    };
    for seed in [0u64, 5, 13, 21, 34] {
        let model = common::medium_model(seed);
        let classes = classify_states(&model);
        let exact = solve_si(&model, &classes, &cfg, None).unwrap();
        for result in [
            solve_bvi(&model, &classes, &cfg).unwrap(),
            solve_ovi(&model, &classes, &cfg).unwrap(),
        ] {
            assert_eq!(result.status, SolverStatus::Converged, "seed {seed}");
            for s in model.states() {
                assert!(
                    diff(result.lower[s], result.upper[s], DiffMode::Relative)
                        <= cfg.epsilon + 1e-12,
                    "seed {seed} state {s}"
                );
                let v = exact.lower[s];
                assert!(result.lower[s] <= v + 1e-9 && v - 1e-9 <= result.upper[s]);
            }
        }
    }
}

#[test]
fn si_matches_oracle_against_forced_zero_regions() {
    // The forced-zero precomputation must agree with the brute force on
    // which states have value exactly zero.
    for seed in 0..40u64 {
        let model = common::small_model(seed);
        let value = common::oracle_value(&model);
        let zero = forced_zero_states(&model);
        for s in model.states() {
            if zero[s.index()] {
                assert!(value[s].abs() <= 1e-12, "seed {seed} state {s}");
            } else {
                assert!(value[s] > 1e-12, "seed {seed} state {s}");
            }
        }
    }
}
