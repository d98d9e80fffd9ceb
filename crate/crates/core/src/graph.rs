//! Graph substrate: state classification, SCC and MEC decomposition,
//! SEC-candidate detection and best-exit computation.
//!
//! Everything here works on the support graph (positive-probability
//! edges) and ignores the actual probabilities.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::model::{Player, SsgModel, StateId};
use crate::value::ValueFunction;

/// Qualitative class of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateClass {
    /// Goal state, value 1.
    Goal,
    /// No path to any goal, value 0.
    Sink,
    /// Everything else; the part the solvers actually work on.
    Unknown,
}

/// Partition of the state space into goals, sinks and unknown states.
#[derive(Debug, Clone)]
pub struct StateClasses {
    class: Vec<StateClass>,
}

impl StateClasses {
    pub fn class(&self, s: StateId) -> StateClass {
        self.class[s.index()]
    }

    pub fn is_goal(&self, s: StateId) -> bool {
        self.class[s.index()] == StateClass::Goal
    }

    pub fn is_sink(&self, s: StateId) -> bool {
        self.class[s.index()] == StateClass::Sink
    }

    pub fn is_unknown(&self, s: StateId) -> bool {
        self.class[s.index()] == StateClass::Unknown
    }

    pub fn goals(&self) -> Vec<StateId> {
        self.collect(StateClass::Goal)
    }

    pub fn sinks(&self) -> Vec<StateId> {
        self.collect(StateClass::Sink)
    }

    pub fn unknown(&self) -> Vec<StateId> {
        self.collect(StateClass::Unknown)
    }

    pub fn len(&self) -> usize {
        self.class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class.is_empty()
    }

    fn collect(&self, class: StateClass) -> Vec<StateId> {
        self.class
            .iter()
            .enumerate()
            .filter(|&(_, c)| *c == class)
            .map(|(i, _)| StateId(i))
            .collect()
    }
}

/// Classifies states by backward reachability from the goal set over the
/// support graph: sinks are the states from which no goal can be reached
/// under any strategy pair.
pub fn classify_states(model: &SsgModel) -> StateClasses {
    let n = model.num_states();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in model.states() {
        for action in model.actions(s) {
            for target in action.distribution.support() {
                if target.index() < n {
                    reverse[target.index()].push(s.index());
                }
            }
        }
    }
    let mut can_reach = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &g in model.goals() {
        if g.index() < n && !can_reach[g.index()] {
            can_reach[g.index()] = true;
            queue.push_back(g.index());
        }
    }
    while let Some(v) = queue.pop_front() {
        for &p in &reverse[v] {
            if !can_reach[p] {
                can_reach[p] = true;
                queue.push_back(p);
            }
        }
    }
    let class = (0..n)
        .map(|i| {
            if model.is_goal(StateId(i)) {
                StateClass::Goal
            } else if can_reach[i] {
                StateClass::Unknown
            } else {
                StateClass::Sink
            }
        })
        .collect();
    StateClasses { class }
}

/// SCCs of the support graph together with a topological ranking.
///
/// Components are stored in topological order: rank 0 is on the initial
/// side and every transition goes from a component to one of equal or
/// higher rank. Bottom components come last.
#[derive(Debug, Clone)]
pub struct SccDecomposition {
    components: Vec<Vec<StateId>>,
    topo_rank: Vec<usize>,
}

impl SccDecomposition {
    pub fn components(&self) -> &[Vec<StateId>] {
        &self.components
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn rank_of(&self, s: StateId) -> usize {
        self.topo_rank[s.index()]
    }

    /// Components from the bottom of the DAG upwards; the order in which
    /// topological solvers process them.
    pub fn reverse_topological(&self) -> impl Iterator<Item = &Vec<StateId>> {
        self.components.iter().rev()
    }
}

/// Iterative Tarjan; components are emitted in completion order, which is
/// reverse topological (bottom components first).
pub(crate) fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index: Vec<Option<usize>> = vec![None; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut next_index = 0usize;

    struct Frame {
        v: usize,
        edge: usize,
    }

    for root in 0..n {
        if index[root].is_some() {
            continue;
        }
        let mut frames = vec![Frame { v: root, edge: 0 }];
        index[root] = Some(next_index);
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(frame) = frames.last_mut() {
            let v = frame.v;
            if frame.edge < adj[v].len() {
                let w = adj[v][frame.edge];
                frame.edge += 1;
                if index[w].is_none() {
                    index[w] = Some(next_index);
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push(Frame { v: w, edge: 0 });
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w].expect("visited"));
                }
            } else {
                if low[v] == index[v].expect("visited") {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    component.sort_unstable();
                    components.push(component);
                }
                frames.pop();
                if let Some(parent) = frames.last() {
                    let pv = parent.v;
                    low[pv] = low[pv].min(low[v]);
                }
            }
        }
    }
    components
}

fn support_adjacency(model: &SsgModel) -> Vec<Vec<usize>> {
    let n = model.num_states();
    let mut adj = vec![Vec::new(); n];
    for s in model.states() {
        for action in model.actions(s) {
            for target in action.distribution.support() {
                if target.index() < n {
                    adj[s.index()].push(target.index());
                }
            }
        }
    }
    adj
}

/// Maximal strongly connected components of the support graph.
pub fn scc_decomposition(model: &SsgModel) -> SccDecomposition {
    let mut components: Vec<Vec<StateId>> = tarjan(&support_adjacency(model))
        .into_iter()
        .map(|c| c.into_iter().map(StateId).collect())
        .collect();
    // Tarjan emits bottom components first; store topological order.
    components.reverse();
    let mut topo_rank = vec![0usize; model.num_states()];
    for (rank, component) in components.iter().enumerate() {
        for &s in component {
            topo_rank[s.index()] = rank;
        }
    }
    SccDecomposition {
        components,
        topo_rank,
    }
}

/// A state set together with the witness actions that stay inside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcCandidate {
    pub states: BTreeSet<StateId>,
    pub actions: BTreeMap<StateId, Vec<usize>>,
}

impl EcCandidate {
    pub fn contains(&self, s: StateId) -> bool {
        self.states.contains(&s)
    }
}

/// Iterative SCC refinement: repeatedly drop state-action pairs that
/// leave their component and recompute SCCs until nothing changes. The
/// surviving components whose states all kept at least one action are
/// the maximal end components of the restricted game.
fn mec_refinement(model: &SsgModel, mut allowed: Vec<Vec<usize>>) -> Vec<EcCandidate> {
    let n = model.num_states();
    let mut components;
    loop {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for s in 0..n {
            for &a in &allowed[s] {
                for target in model.actions(StateId(s))[a].distribution.support() {
                    adj[s].push(target.index());
                }
            }
        }
        components = tarjan(&adj);
        let mut comp_of = vec![0usize; n];
        for (ci, component) in components.iter().enumerate() {
            for &s in component {
                comp_of[s] = ci;
            }
        }
        let mut changed = false;
        for s in 0..n {
            let before = allowed[s].len();
            let my_comp = comp_of[s];
            allowed[s].retain(|&a| {
                model.actions(StateId(s))[a]
                    .distribution
                    .support()
                    .all(|t| comp_of[t.index()] == my_comp)
            });
            if allowed[s].len() != before {
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut candidates: Vec<EcCandidate> = components
        .into_iter()
        .filter(|component| component.iter().all(|&s| !allowed[s].is_empty()))
        .map(|component| {
            let actions = component
                .iter()
                .map(|&s| (StateId(s), allowed[s].clone()))
                .collect();
            EcCandidate {
                states: component.into_iter().map(StateId).collect(),
                actions,
            }
        })
        .collect();
    candidates.sort_by_key(|c| *c.states.iter().next().expect("nonempty component"));
    candidates
}

/// The maximal end components of the game, each with its witness action
/// sets.
pub fn mec_decomposition(model: &SsgModel) -> Vec<EcCandidate> {
    let allowed = model
        .states()
        .map(|s| (0..model.actions(s).len()).collect())
        .collect();
    mec_refinement(model, allowed)
}

/// Tie tolerance of the Maximizer restriction in
/// [`find_sec_candidates`]. Genuinely tied actions can differ by a few
/// ulps of summation noise in the iterates; an exact-equality tie can
/// then keep only a component-leaving action forever and hide the
/// component from deflating, so bounded iteration would never
/// terminate. Deflating stays sound for any tie rule because every
/// candidate is a genuine end component.
pub const SEC_TIE_TOLERANCE: f64 = 1e-12;

/// Guesses simple-end-component candidates from a lower bound.
///
/// Maximizer states keep the actions maximizing the expected lower
/// bound (near-ties within [`SEC_TIE_TOLERANCE`] kept); Minimizer
/// states keep all actions. The MECs of that restricted game that lie
/// in the unknown part are the candidates. The result is a pure
/// function of the model and the lower bound.
pub fn find_sec_candidates(
    model: &SsgModel,
    classes: &StateClasses,
    lower: &ValueFunction,
) -> Vec<EcCandidate> {
    let allowed = model
        .states()
        .map(|s| {
            let actions = model.actions(s);
            match model.owner(s) {
                Player::Minimizer => (0..actions.len()).collect(),
                Player::Maximizer => {
                    let values: Vec<f64> = actions
                        .iter()
                        .map(|a| lower.expected(&a.distribution))
                        .collect();
                    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (0..actions.len())
                        .filter(|&a| values[a] >= best - SEC_TIE_TOLERANCE)
                        .collect()
                }
            }
        })
        .collect();
    let mut candidates = mec_refinement(model, allowed);
    candidates.retain(|c| c.states.iter().all(|&s| classes.is_unknown(s)));
    candidates
}

/// States where Minimizer can force the goal probability to be exactly
/// zero: the complement of Maximizer's positive-probability attractor of
/// the goal set. Unlike [`classify_states`] sinks, this accounts for who
/// controls each state; the value is exactly 0 on these states.
pub fn forced_zero_states(model: &SsgModel) -> Vec<bool> {
    let n = model.num_states();
    // touching[(s, a)] -> has a target in the attractor already;
    // remaining[s] -> actions of a Minimizer state not yet touching.
    let mut occurs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut remaining: Vec<usize> = vec![0; n];
    let mut touching: Vec<Vec<bool>> = Vec::with_capacity(n);
    for s in model.states() {
        let actions = model.actions(s);
        remaining[s.index()] = actions.len();
        touching.push(vec![false; actions.len()]);
        for (a, action) in actions.iter().enumerate() {
            for t in action.distribution.support() {
                if t.index() < n {
                    occurs[t.index()].push((s.index(), a));
                }
            }
        }
    }
    let mut in_attractor = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &g in model.goals() {
        if g.index() < n && !in_attractor[g.index()] {
            in_attractor[g.index()] = true;
            queue.push_back(g.index());
        }
    }
    while let Some(t) = queue.pop_front() {
        for &(s, a) in &occurs[t] {
            if touching[s][a] {
                continue;
            }
            touching[s][a] = true;
            if in_attractor[s] {
                continue;
            }
            let joins = match model.owner(StateId(s)) {
                Player::Maximizer => true,
                Player::Minimizer => {
                    remaining[s] -= 1;
                    remaining[s] == 0
                }
            };
            if joins {
                in_attractor[s] = true;
                queue.push_back(s);
            }
        }
    }
    in_attractor.iter().map(|&a| !a).collect()
}

/// True when every state is reachable from the initial state on the
/// support graph.
pub fn all_reachable_from_initial(model: &SsgModel) -> bool {
    let n = model.num_states();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([model.initial().index()]);
    seen[model.initial().index()] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for action in model.actions(StateId(v)) {
            for t in action.distribution.support() {
                if t.index() < n && !seen[t.index()] {
                    seen[t.index()] = true;
                    count += 1;
                    queue.push_back(t.index());
                }
            }
        }
    }
    count == n
}

/// Best exit from `states` according to `f`: the maximum expected value
/// over Maximizer actions leaving the set, with `max of nothing = 0`.
pub fn best_exit(model: &SsgModel, states: &BTreeSet<StateId>, f: &ValueFunction) -> f64 {
    let mut best = 0.0f64;
    for &s in states {
        if model.owner(s) != Player::Maximizer {
            continue;
        }
        for action in model.actions(s) {
            let exits = action
                .distribution
                .support()
                .any(|t| !states.contains(&t));
            if exits {
                best = best.max(f.expected(&action.distribution));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::generate;

    fn fig1_value() -> ValueFunction {
        ValueFunction::from_vec(vec![0.5, 0.5, 1.0, 0.0])
    }

    #[test]
    fn classify_cycle_fixture() {
        let model = fixtures::cycle_with_coin_exit();
        let classes = classify_states(&model);
        assert_eq!(classes.goals(), vec![StateId(2)]);
        assert_eq!(classes.sinks(), vec![StateId(3)]);
        assert_eq!(classes.unknown(), vec![StateId(0), StateId(1)]);
    }

    #[test]
    fn classify_chain_has_no_extra_sinks() {
        let model = generate::tvi_chain(3);
        let classes = classify_states(&model);
        assert_eq!(classes.goals(), vec![StateId(3)]);
        assert_eq!(classes.sinks(), vec![StateId(4)]);
        assert_eq!(
            classes.unknown(),
            vec![StateId(0), StateId(1), StateId(2)]
        );
    }

    #[test]
    fn classify_all_goal_reaching_model_has_no_sinks() {
        let model = fixtures::single_goal();
        let classes = classify_states(&model);
        assert!(classes.sinks().is_empty());
    }

    #[test]
    fn partition_covers_all_states() {
        let model = fixtures::cycle_with_coin_exit();
        let classes = classify_states(&model);
        assert_eq!(
            classes.goals().len() + classes.sinks().len() + classes.unknown().len(),
            model.num_states()
        );
    }

    #[test]
    fn scc_of_cycle_fixture() {
        let model = fixtures::cycle_with_coin_exit();
        let scc = scc_decomposition(&model);
        assert_eq!(scc.num_components(), 3);
        assert_eq!(scc.components()[0], vec![StateId(0), StateId(1)]);
        assert!(scc.rank_of(StateId(0)) < scc.rank_of(StateId(2)));
        assert!(scc.rank_of(StateId(0)) < scc.rank_of(StateId(3)));
    }

    #[test]
    fn scc_of_chain_is_all_singletons() {
        let model = generate::tvi_chain(4);
        let scc = scc_decomposition(&model);
        assert_eq!(scc.num_components(), model.num_states());
        // Transitions never decrease the rank.
        for s in model.states() {
            for a in 0..model.actions(s).len() {
                for t in model.post(s, a).unwrap() {
                    assert!(scc.rank_of(s) <= scc.rank_of(t));
                }
            }
        }
    }

    #[test]
    fn mec_of_cycle_fixture() {
        let model = fixtures::cycle_with_coin_exit();
        let mecs = mec_decomposition(&model);
        assert_eq!(mecs.len(), 3);
        let cycle = &mecs[0];
        assert_eq!(
            cycle.states,
            BTreeSet::from([StateId(0), StateId(1)])
        );
        // Action c exits, so s1 keeps only b.
        assert_eq!(cycle.actions[&StateId(0)], vec![0]);
        assert_eq!(cycle.actions[&StateId(1)], vec![0]);
    }

    #[test]
    fn mec_of_chain_is_only_absorbing_states() {
        let model = generate::tvi_chain(5);
        let mecs = mec_decomposition(&model);
        let state_sets: Vec<_> = mecs.iter().map(|m| m.states.clone()).collect();
        assert_eq!(
            state_sets,
            vec![
                BTreeSet::from([StateId(5)]),
                BTreeSet::from([StateId(6)])
            ]
        );
    }

    #[test]
    fn self_loop_singleton_is_mec() {
        let model = fixtures::single_goal();
        let mecs = mec_decomposition(&model);
        assert_eq!(mecs.len(), 1);
        assert_eq!(mecs[0].states, BTreeSet::from([StateId(0)]));
    }

    #[test]
    fn sec_candidates_with_exact_lower_bound() {
        let model = fixtures::cycle_with_coin_exit();
        let classes = classify_states(&model);
        let candidates = find_sec_candidates(&model, &classes, &fig1_value());
        assert_eq!(candidates.len(), 1);
        assert_eq!(
            candidates[0].states,
            BTreeSet::from([StateId(0), StateId(1)])
        );
    }

    #[test]
    fn sec_candidates_prune_strictly_better_exit() {
        let model = fixtures::cycle_with_coin_exit();
        let classes = classify_states(&model);
        let lower = ValueFunction::from_vec(vec![0.0, 0.5, 1.0, 0.0]);
        let candidates = find_sec_candidates(&model, &classes, &lower);
        assert!(candidates.is_empty());
    }

    #[test]
    fn sec_candidates_empty_on_ec_free_model() {
        let model = generate::tvi_chain(3);
        let classes = classify_states(&model);
        for lower in [
            ValueFunction::zeros(model.num_states()),
            ValueFunction::constant(model.num_states(), 0.5),
            ValueFunction::from_vec(vec![0.6, 0.6, 0.6, 1.0, 0.0]),
        ] {
            assert!(find_sec_candidates(&model, &classes, &lower).is_empty());
        }
    }

    #[test]
    fn best_exit_of_cycle() {
        let model = fixtures::cycle_with_coin_exit();
        let t = BTreeSet::from([StateId(0), StateId(1)]);
        assert_eq!(best_exit(&model, &t, &fig1_value()), 0.5);
        // All-ones upper bound: the coin exit evaluates to 1.
        let upper = ValueFunction::constant(4, 1.0);
        assert_eq!(best_exit(&model, &t, &upper), 1.0);
        // A set whose only exits belong to Minimizer has best exit 0.
        let min_only = BTreeSet::from([StateId(0)]);
        assert_eq!(best_exit(&model, &min_only, &fig1_value()), 0.0);
    }
}
