//! Strategy extraction, the local optimality check and strategy
//! iteration.

use std::collections::VecDeque;

use crate::graph::{forced_zero_states, StateClasses};
use crate::model::{MarkovChain, MaxStrategy, MinStrategy, Player, SsgModel, StateId};
use crate::solvers::{
    finish, linear::solve_markov_chain, Budget, SolveError, SolverConfig, SolverResult,
    SolverStatus, CHECK_TOLERANCE,
};
use crate::value::ValueFunction;

fn action_values(model: &SsgModel, f: &ValueFunction, s: StateId) -> Vec<f64> {
    model
        .actions(s)
        .iter()
        .map(|a| f.expected(&a.distribution))
        .collect()
}

/// Guesses strategies from bounds: the Minimizer choice comes from the
/// upper bound (lowest index among the exact argmin), the Maximizer
/// support is the full argmax set under the lower bound, played
/// uniformly so that optimal-but-circling actions cannot trap the play.
/// Callers working from plain VI pass the same function for both bounds.
///
/// Goal and sink states just take their first action; every choice is
/// equivalent there.
pub fn extract_strategies(
    model: &SsgModel,
    classes: &StateClasses,
    lower: &ValueFunction,
    upper: &ValueFunction,
) -> (MaxStrategy, MinStrategy) {
    let unknown = model.states().filter(|&s| classes.is_unknown(s));
    let (mut sigma, mut tau) = extract_for(model, unknown, lower, upper);
    for s in model.states() {
        if classes.is_unknown(s) {
            continue;
        }
        match model.owner(s) {
            Player::Maximizer => sigma.set(s, vec![0]),
            Player::Minimizer => tau.set(s, 0),
        }
    }
    (sigma, tau)
}

pub(crate) fn extract_for(
    model: &SsgModel,
    states: impl Iterator<Item = StateId>,
    lower: &ValueFunction,
    upper: &ValueFunction,
) -> (MaxStrategy, MinStrategy) {
    let mut sigma = MaxStrategy::new();
    let mut tau = MinStrategy::new();
    for s in states {
        match model.owner(s) {
            Player::Maximizer => {
                let values = action_values(model, lower, s);
                let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let support: Vec<usize> = (0..values.len())
                    .filter(|&a| values[a] == best)
                    .collect();
                sigma.set(s, support);
            }
            Player::Minimizer => {
                let values = action_values(model, upper, s);
                let mut best = 0usize;
                for a in 1..values.len() {
                    if values[a] < values[best] {
                        best = a;
                    }
                }
                tau.set(s, best);
            }
        }
    }
    (sigma, tau)
}

/// True when, under the exact chain values, every supported Maximizer
/// action is optimal and every Minimizer choice is optimal, up to the
/// solver comparison tolerance. States not covered by the strategies are
/// not checked, so the check is vacuously true on a Markov chain.
pub fn local_optimality_check(
    model: &SsgModel,
    sigma: &MaxStrategy,
    tau: &MinStrategy,
    v_mc: &ValueFunction,
) -> bool {
    let sigma_ok = sigma.iter().all(|(s, support)| {
        let values = action_values(model, v_mc, s);
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        support.iter().all(|&a| values[a] >= best - CHECK_TOLERANCE)
    });
    let tau_ok = tau.iter().all(|(s, choice)| {
        let values = action_values(model, v_mc, s);
        let best = values.iter().copied().fold(f64::INFINITY, f64::min);
        values[choice] <= best + CHECK_TOLERANCE
    });
    sigma_ok && tau_ok
}

/// States of a chain that can reach a goal; exactly the complement of
/// the rows the linear solve must remove. Computed by backward
/// reachability, so the hint is exact.
pub(crate) fn chain_zero_hint(chain: &MarkovChain) -> ValueFunction {
    let n = chain.num_states();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, row) in chain.rows.iter().enumerate() {
        for target in row.support() {
            reverse[target.index()].push(s);
        }
    }
    let mut hint = ValueFunction::zeros(n);
    let mut queue = VecDeque::new();
    for &g in &chain.goals {
        if hint[g] == 0.0 {
            hint[g] = 1.0;
            queue.push_back(g.index());
        }
    }
    while let Some(v) = queue.pop_front() {
        for &p in &reverse[v] {
            if hint[StateId(p)] == 0.0 {
                hint[StateId(p)] = 1.0;
                queue.push_back(p);
            }
        }
    }
    hint
}

/// A deterministic Maximizer policy that makes progress towards the
/// goals wherever they are reachable: each state picks the lowest-index
/// action leading one BFS layer closer. Avoids starting policy iteration
/// from a value-preserving but non-stopping policy.
fn proper_max_policy(model: &SsgModel, tau: &MinStrategy) -> Vec<usize> {
    let n = model.num_states();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    let allowed = |s: StateId| -> Vec<usize> {
        match model.owner(s) {
            Player::Maximizer => (0..model.actions(s).len()).collect(),
            Player::Minimizer => tau.get(s).map(|a| vec![a]).unwrap_or_default(),
        }
    };
    for s in model.states() {
        for a in allowed(s) {
            for t in model.actions(s)[a].distribution.support() {
                reverse[t.index()].push(s.index());
            }
        }
    }
    let mut dist: Vec<Option<u32>> = vec![None; n];
    let mut queue = VecDeque::new();
    for &g in model.goals() {
        if dist[g.index()].is_none() {
            dist[g.index()] = Some(0);
            queue.push_back(g.index());
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[v].expect("queued with distance");
        for &p in &reverse[v] {
            if dist[p].is_none() {
                dist[p] = Some(d + 1);
                queue.push_back(p);
            }
        }
    }
    model
        .states()
        .map(|s| {
            if model.owner(s) != Player::Maximizer {
                return 0;
            }
            match dist[s.index()] {
                Some(d) if d > 0 => {
                    let actions = model.actions(s);
                    (0..actions.len())
                        .find(|&a| {
                            actions[a]
                                .distribution
                                .support()
                                .any(|t| dist[t.index()] == Some(d - 1))
                        })
                        .unwrap_or(0)
                }
                _ => 0,
            }
        })
        .collect()
}

fn policy_chain(model: &SsgModel, pi: &[usize], tau: &MinStrategy) -> MarkovChain {
    let rows = model
        .states()
        .map(|s| {
            let a = match model.owner(s) {
                Player::Maximizer => pi[s.index()],
                Player::Minimizer => tau.get(s).expect("total minimizer strategy"),
            };
            model.actions(s)[a].distribution.clone()
        })
        .collect();
    MarkovChain {
        rows,
        goals: model.goals().clone(),
    }
}

/// Exact optimal response of Maximizer against a fixed Minimizer
/// strategy, by policy iteration with exact policy evaluation. States in
/// `zero` are pinned to value 0 throughout.
fn solve_max_response(
    model: &SsgModel,
    tau: &MinStrategy,
    zero: &[bool],
    budget: &mut Budget,
) -> Result<ValueFunction, SolveError> {
    let mut pi = proper_max_policy(model, tau);
    loop {
        let chain = policy_chain(model, &pi, tau);
        let mut hint = chain_zero_hint(&chain);
        for s in model.states() {
            if zero[s.index()] {
                hint[s] = 0.0;
            }
        }
        let values = solve_markov_chain(&chain, &hint)?;
        budget.charge_sweep(model.num_states());

        let mut switched = false;
        for s in model.states() {
            if model.owner(s) != Player::Maximizer || zero[s.index()] {
                continue;
            }
            let vals = action_values(model, &values, s);
            let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            // Ties go to the incumbent so value-preserving loops are
            // never adopted.
            if best - vals[pi[s.index()]] > CHECK_TOLERANCE {
                pi[s.index()] = (0..vals.len())
                    .find(|&a| vals[a] == best)
                    .expect("max is attained");
                switched = true;
            }
        }
        if !switched || budget.exhausted().is_some() {
            return Ok(values);
        }
    }
}

/// Strategy iteration: repeatedly solve Maximizer's response MDP exactly
/// and let Minimizer switch wherever a strictly better action exists.
/// Returns the precise value function.
///
/// States where Minimizer can force the goal probability to zero are
/// precomputed and pinned to 0. Without that, the switch test cannot see
/// any one-step gain on a constant plateau over a Minimizer-controlled
/// end component and iteration would stabilize on wrong values.
pub fn solve_si(
    model: &SsgModel,
    classes: &StateClasses,
    cfg: &SolverConfig,
    initial_tau: Option<MinStrategy>,
) -> Result<SolverResult, SolveError> {
    let _ = classes;
    let mut budget = Budget::new(cfg);
    let zero = forced_zero_states(model);
    let mut tau = initial_tau.unwrap_or_default();
    for s in model.states() {
        if model.owner(s) == Player::Minimizer && tau.get(s).is_none() {
            tau.set(s, 0);
        }
    }

    let mut outer: u64 = 0;
    loop {
        outer += 1;
        let values = solve_max_response(model, &tau, &zero, &mut budget)?;

        let mut switched = false;
        for s in model.states() {
            if model.owner(s) != Player::Minimizer || zero[s.index()] {
                continue;
            }
            let vals = action_values(model, &values, s);
            let current = vals[tau.get(s).expect("total strategy")];
            let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
            if current - best > CHECK_TOLERANCE {
                tau.set(
                    s,
                    (0..vals.len())
                        .find(|&a| vals[a] == best)
                        .expect("min is attained"),
                );
                switched = true;
            }
        }
        if !switched {
            let mut result = finish(
                values.clone(),
                values,
                SolverStatus::Precise,
                &budget,
            );
            result.iterations = outer;
            return Ok(result);
        }
        if let Some(status) = budget.exhausted() {
            let mut result = finish(
                ValueFunction::zeros(model.num_states()),
                ValueFunction::constant(model.num_states(), 1.0),
                status,
                &budget,
            );
            result.iterations = outer;
            return Ok(result);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::classify_states;
    use crate::model::induced_markov_chain;

    #[test]
    fn strategies_from_exact_values() {
        let model = fixtures::cycle_with_coin_exit();
        let classes = classify_states(&model);
        let v = ValueFunction::from_vec(vec![0.5, 0.5, 1.0, 0.0]);
        let (sigma, tau) = extract_strategies(&model, &classes, &v, &v);
        assert_eq!(tau.get(StateId(0)), Some(0));
        assert_eq!(sigma.get(StateId(1)), Some(&[0usize, 1][..]));
    }

    #[test]
    fn strategies_mid_convergence_pick_strictly_better() {
        let model = fixtures::cycle_with_coin_exit();
        let classes = classify_states(&model);
        let lower = ValueFunction::from_vec(vec![0.4, 0.5, 1.0, 0.0]);
        let (sigma, _) = extract_strategies(&model, &classes, &lower, &lower);
        assert_eq!(sigma.get(StateId(1)), Some(&[1usize][..]));
    }

    #[test]
    fn local_check_accepts_optimal_pair() {
        let model = fixtures::cycle_with_coin_exit();
        let classes = classify_states(&model);
        let v = ValueFunction::from_vec(vec![0.5, 0.5, 1.0, 0.0]);
        let (sigma, tau) = extract_strategies(&model, &classes, &v, &v);
        let chain = induced_markov_chain(&model, &sigma, &tau).unwrap();
        let v_mc = solve_markov_chain(&chain, &chain_zero_hint(&chain)).unwrap();
        assert!(local_optimality_check(&model, &sigma, &tau, &v_mc));
    }

    #[test]
    fn local_check_rejects_circling_support() {
        let model = fixtures::cycle_with_coin_exit();
        let mut sigma = MaxStrategy::new();
        sigma.set(StateId(1), vec![0]); // only the cycling action
        sigma.set(StateId(2), vec![0]);
        let mut tau = MinStrategy::new();
        tau.set(StateId(0), 0);
        tau.set(StateId(3), 0);
        let chain = induced_markov_chain(&model, &sigma, &tau).unwrap();
        let v_mc = solve_markov_chain(&chain, &chain_zero_hint(&chain)).unwrap();
        assert_eq!(v_mc[StateId(1)], 0.0);
        assert!(!local_optimality_check(&model, &sigma, &tau, &v_mc));
    }

    #[test]
    fn si_solves_cycle_fixture_exactly() {
        let model = fixtures::cycle_with_coin_exit();
        let classes = classify_states(&model);
        let cfg = SolverConfig::default();
        let result = solve_si(&model, &classes, &cfg, None).unwrap();
        assert_eq!(result.status, SolverStatus::Precise);
        assert_eq!(result.lower[StateId(0)], 0.5);
        assert_eq!(result.lower[StateId(1)], 0.5);
        assert_eq!(result.iterations, 1);
    }
}
