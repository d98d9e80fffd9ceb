//! Random and handcrafted model generation.
//!
//! All randomness comes from a ChaCha8 stream cipher RNG seeded with the
//! 64-bit seed from the parameter struct, so identical parameters yield
//! byte-identical models on every platform. Draws happen in a fixed
//! order: first one owner draw per state (ascending), then the forward
//! procedure (ascending states; per action first the target pick, then
//! the increment), then the backward procedure (descending states; per
//! state one geometric draw followed by the action fills).

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Action, Distribution, Player, SsgModel, StateId};

/// Fallback smallest transition probability used by generators whose
/// parameter set does not expose one.
pub const DEFAULT_MIN_PROB: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("need at least {min} states, got {n}")]
    TooFewStates { n: usize, min: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

/// Parameters for the unconstrained random generator.
#[derive(Debug, Clone)]
pub struct GenParams {
    /// State count, at least 2 (initial state plus goal).
    pub n: usize,
    /// Per-state chance of belonging to Minimizer.
    pub minimizer_prob: f64,
    /// Chance of adding yet another action in the backward procedure;
    /// the extra-action count is geometric with this continue
    /// probability, capped at ten times its mean.
    pub extra_action_geom: f64,
    /// Smallest permitted transition probability (the closing adjustment
    /// of a fill may still fall below it unless `strict_min_prob`).
    pub min_prob: f64,
    /// Optional cap on the number of transitions per action.
    pub max_transitions_per_action: Option<usize>,
    /// Re-draw fills whose closing adjustment violates `min_prob`, up to
    /// 100 times.
    pub strict_min_prob: bool,
    pub seed: u64,
}

impl GenParams {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            minimizer_prob: 0.5,
            extra_action_geom: 0.5,
            min_prob: DEFAULT_MIN_PROB,
            max_transitions_per_action: None,
            strict_min_prob: false,
            seed,
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        if self.n < 2 {
            return Err(GenError::TooFewStates { n: self.n, min: 2 });
        }
        if !(0.0..=1.0).contains(&self.minimizer_prob) {
            return Err(GenError::InvalidParam("minimizer_prob not in [0,1]".into()));
        }
        if !(self.extra_action_geom > 0.0 && self.extra_action_geom < 1.0) {
            return Err(GenError::InvalidParam(
                "extra_action_geom not in (0,1)".into(),
            ));
        }
        if !(self.min_prob > 0.0 && self.min_prob <= 1.0) {
            return Err(GenError::InvalidParam("min_prob not in (0,1]".into()));
        }
        Ok(())
    }
}

/// Parameters for the tree-shaped generator.
#[derive(Debug, Clone)]
pub struct TreeParams {
    pub n: usize,
    /// Maximum actions/children per inner node.
    pub k: usize,
    pub seed: u64,
}

/// Parameters for the chained-SCC generator.
#[derive(Debug, Clone)]
pub struct SccChainParams {
    /// Minimum total number of block states.
    pub n: usize,
    pub scc_size_min: usize,
    pub scc_size_max: usize,
    pub seed: u64,
}

/// Options controlling a single action fill.
#[derive(Debug, Clone)]
pub struct FillOptions {
    pub min_prob: f64,
    pub max_transitions: Option<usize>,
    pub strict_min_prob: bool,
}

impl Default for FillOptions {
    fn default() -> Self {
        Self {
            min_prob: DEFAULT_MIN_PROB,
            max_transitions: None,
            strict_min_prob: false,
        }
    }
}

/// Uniform draw from `(min_prob, 1]`.
fn increment<R: Rng>(rng: &mut R, min_prob: f64) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    min_prob + (1.0 - min_prob) * u
}

/// Geometric number of extra items: count of successes before the first
/// failure with continue probability `g`, capped.
fn geometric<R: Rng>(rng: &mut R, g: f64, cap: usize) -> usize {
    let mut m = 0;
    while m < cap && rng.random::<f64>() < g {
        m += 1;
    }
    m
}

fn geometric_cap(g: f64) -> usize {
    ((10.0 * g / (1.0 - g)).ceil() as usize).max(1)
}

/// Completes a partially built action into an exact probability
/// distribution.
///
/// Starting from the optional forced entry, repeatedly picks a uniformly
/// random uncovered target from `targets` and adds an increment drawn
/// from `(min_prob, 1]`, until the mass reaches 1, every target is
/// covered, or the transition cap is hit. The most recently added entry
/// is then adjusted so the probabilities sum to exactly 1.
pub fn fill_action<R: Rng>(
    rng: &mut R,
    targets: &[StateId],
    forced: Option<(StateId, f64)>,
    opts: &FillOptions,
) -> Distribution {
    for attempt in 0..100 {
        let entries = fill_once(rng, targets, forced, opts);
        if !opts.strict_min_prob
            || attempt == 99
            || entries.iter().all(|&(_, p)| p >= opts.min_prob)
        {
            return Distribution::new(entries).expect("fill produces a valid distribution");
        }
    }
    unreachable!("loop always returns");
}

fn fill_once<R: Rng>(
    rng: &mut R,
    targets: &[StateId],
    forced: Option<(StateId, f64)>,
    opts: &FillOptions,
) -> Vec<(StateId, f64)> {
    let mut entries: Vec<(StateId, f64)> = Vec::new();
    let mut mass = 0.0;
    let mut pool: Vec<StateId> = targets.to_vec();
    if let Some((target, prob)) = forced {
        pool.retain(|&t| t != target);
        entries.push((target, prob));
        mass += prob;
    }
    let cap = opts.max_transitions.unwrap_or(usize::MAX);
    while mass < 1.0 && !pool.is_empty() && entries.len() < cap {
        let idx = rng.random_range(0..pool.len());
        let target = pool.swap_remove(idx);
        let p = increment(rng, opts.min_prob);
        entries.push((target, p));
        mass += p;
    }
    // Close the distribution on the most recently modified entry: reduce
    // it on overshoot, raise it when the pool or the cap ran out early.
    let prefix: f64 = entries[..entries.len() - 1].iter().map(|&(_, p)| p).sum();
    if let Some(last) = entries.last_mut() {
        last.1 = 1.0 - prefix;
    }
    entries.retain(|&(_, p)| p > 0.0);
    entries
}

/// Generates a random game in which every state is reachable from the
/// initial state. State `n - 1` is the unique goal and is absorbing.
pub fn generate_random(params: &GenParams) -> Result<SsgModel, GenError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n;
    let goal = StateId(n - 1);
    let targets: Vec<StateId> = (0..n).map(StateId).collect();
    let opts = FillOptions {
        min_prob: params.min_prob,
        max_transitions: params.max_transitions_per_action,
        strict_min_prob: params.strict_min_prob,
    };

    let owner: Vec<Player> = (0..n)
        .map(|_| {
            if rng.random::<f64>() < params.minimizer_prob {
                Player::Minimizer
            } else {
                Player::Maximizer
            }
        })
        .collect();

    let mut actions: Vec<Vec<Action>> = vec![Vec::new(); n];
    let mut has_incoming = vec![false; n];

    // Forward procedure: every state gets an incoming transition from a
    // lower-indexed state, so everything is reachable from state 0.
    for s in 1..n {
        if has_incoming[s] {
            continue;
        }
        let source = rng.random_range(0..s);
        let forced_prob = increment(&mut rng, params.min_prob);
        let dist = fill_action(
            &mut rng,
            &targets,
            Some((StateId(s), forced_prob)),
            &opts,
        );
        for t in dist.support() {
            has_incoming[t.index()] = true;
        }
        actions[source].push(Action::new(format!("f{s}"), dist));
    }

    // Backward procedure: a geometric number of extra actions per state,
    // at least one where none exists yet. The goal state is skipped and
    // receives its absorbing self-loop instead.
    let cap = geometric_cap(params.extra_action_geom);
    for s in (0..n).rev() {
        if StateId(s) == goal {
            continue;
        }
        let mut m = geometric(&mut rng, params.extra_action_geom, cap);
        if actions[s].is_empty() {
            m = m.max(1);
        }
        for i in 0..m {
            let dist = fill_action(&mut rng, &targets, None, &opts);
            actions[s].push(Action::new(format!("b{i}"), dist));
        }
    }
    actions[goal.index()] = vec![Action::new("loop", Distribution::dirac(goal))];

    Ok(SsgModel::new(
        owner,
        actions,
        StateId(0),
        BTreeSet::from([goal]),
    ))
}

/// Generates a tree-like game: the initial state is the root, inner
/// nodes have one action per child (forced edge to the child, remainder
/// filled randomly), and leaves receive their actions only in a backward
/// pass so end components can appear. State `n - 1` (the last created
/// leaf) is the absorbing goal.
pub fn generate_tree(params: &TreeParams) -> Result<SsgModel, GenError> {
    if params.n < 2 {
        return Err(GenError::TooFewStates {
            n: params.n,
            min: 2,
        });
    }
    if params.k < 1 {
        return Err(GenError::InvalidParam("k must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n;
    let goal = StateId(n - 1);
    let targets: Vec<StateId> = (0..n).map(StateId).collect();
    let opts = FillOptions {
        min_prob: DEFAULT_MIN_PROB,
        max_transitions: None,
        strict_min_prob: false,
    };

    let owner: Vec<Player> = (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.5 {
                Player::Minimizer
            } else {
                Player::Maximizer
            }
        })
        .collect();

    let mut actions: Vec<Vec<Action>> = vec![Vec::new(); n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut next_id = 1usize;
    while next_id < n {
        let parent = queue.pop_front().expect("tree construction exhausted");
        let children = params.k.min(n - next_id);
        for c in 0..children {
            let child = StateId(next_id);
            next_id += 1;
            queue.push_back(child.index());
            let forced_prob = increment(&mut rng, opts.min_prob);
            let dist = fill_action(&mut rng, &targets, Some((child, forced_prob)), &opts);
            actions[parent].push(Action::new(format!("c{c}"), dist));
        }
    }

    // Backward pass over the leaves.
    for s in (0..n).rev() {
        if StateId(s) == goal || !actions[s].is_empty() {
            continue;
        }
        let m = geometric(&mut rng, 0.5, geometric_cap(0.5)).max(1);
        for i in 0..m {
            let dist = fill_action(&mut rng, &targets, None, &opts);
            actions[s].push(Action::new(format!("b{i}"), dist));
        }
    }
    actions[goal.index()] = vec![Action::new("loop", Distribution::dirac(goal))];

    Ok(SsgModel::new(
        owner,
        actions,
        StateId(0),
        BTreeSet::from([goal]),
    ))
}

/// Generates a chain of blocks, each forced into a single SCC.
///
/// Blocks of a size drawn from `[scc_size_min, scc_size_max]` are built
/// with the unconstrained procedure restricted to the block, their SCCs
/// are circularly connected along the topological enumeration, and each
/// block gets an entry action from its predecessor. A goal and a sink
/// state close the chain behind the last block.
pub fn generate_scc_chain(params: &SccChainParams) -> Result<SsgModel, GenError> {
    let (a, b) = (params.scc_size_min, params.scc_size_max);
    if a < 1 || a > b || b > params.n {
        return Err(GenError::InvalidParam(
            "need 1 <= scc_size_min <= scc_size_max <= n".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let opts = FillOptions {
        min_prob: DEFAULT_MIN_PROB,
        max_transitions: None,
        strict_min_prob: false,
    };

    let mut owner: Vec<Player> = Vec::new();
    let mut actions: Vec<Vec<Action>> = Vec::new();
    let mut blocks: Vec<(usize, usize)> = Vec::new(); // (base, size)

    while owner.len() < params.n {
        let size = rng.random_range(a..=b);
        let base = owner.len();
        let block_targets: Vec<StateId> = (base..base + size).map(StateId).collect();
        for _ in 0..size {
            owner.push(if rng.random::<f64>() < 0.5 {
                Player::Minimizer
            } else {
                Player::Maximizer
            });
            actions.push(Vec::new());
        }

        let mut has_incoming = vec![false; size];
        for local in 1..size {
            if has_incoming[local] {
                continue;
            }
            let source = base + rng.random_range(0..local);
            let forced_prob = increment(&mut rng, opts.min_prob);
            let dist = fill_action(
                &mut rng,
                &block_targets,
                Some((StateId(base + local), forced_prob)),
                &opts,
            );
            for t in dist.support() {
                has_incoming[t.index() - base] = true;
            }
            actions[source].push(Action::new(format!("f{local}"), dist));
        }
        let cap = geometric_cap(0.5);
        for local in (0..size).rev() {
            let mut m = geometric(&mut rng, 0.5, cap);
            if actions[base + local].is_empty() {
                m = m.max(1);
            }
            for i in 0..m {
                let dist = fill_action(&mut rng, &block_targets, None, &opts);
                actions[base + local].push(Action::new(format!("b{i}"), dist));
            }
        }

        // Unify the block's SCCs by circular links along the topological
        // enumeration.
        let block_adj: Vec<Vec<usize>> = (0..size)
            .map(|local| {
                actions[base + local]
                    .iter()
                    .flat_map(|a| a.distribution.support())
                    .map(|t| t.index() - base)
                    .collect()
            })
            .collect();
        let mut comps = crate::graph::tarjan(&block_adj);
        comps.reverse(); // topological order
        if comps.len() > 1 {
            for i in 0..comps.len() {
                let next = &comps[(i + 1) % comps.len()];
                let from = base + comps[i][rng.random_range(0..comps[i].len())];
                let to = StateId(base + next[rng.random_range(0..next.len())]);
                actions[from].push(Action::new("link", Distribution::dirac(to)));
            }
        }

        if let Some(&(prev_base, prev_size)) = blocks.last() {
            let from = prev_base + rng.random_range(0..prev_size);
            actions[from].push(Action::new(
                "chain",
                Distribution::dirac(StateId(base)),
            ));
        }
        blocks.push((base, size));
    }

    // Goal and sink behind the last block.
    let goal = StateId(owner.len());
    let sink = StateId(owner.len() + 1);
    owner.push(Player::Maximizer);
    actions.push(vec![Action::new("loop", Distribution::dirac(goal))]);
    owner.push(Player::Maximizer);
    actions.push(vec![Action::new("loop", Distribution::dirac(sink))]);
    let &(last_base, last_size) = blocks.last().expect("at least one block");
    let from = last_base + rng.random_range(0..last_size);
    actions[from].push(Action::new(
        "exit",
        Distribution::new(vec![(goal, 0.5), (sink, 0.5)]).unwrap(),
    ));

    Ok(SsgModel::new(
        owner,
        actions,
        StateId(0),
        BTreeSet::from([goal]),
    ))
}

/// The handcrafted model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandcraftedKind {
    /// Chain of singleton SCCs ending in a 0.6/0.4 exit.
    TviChain,
    /// Maximizer chain where a direct 0.5 exit competes with slow
    /// self-looping progress.
    OviEasy,
    /// The same chain with the direct exits removed.
    OviHard,
    /// Trees chained into SCCs via leaf return edges.
    SimpleScc,
}

/// Dispatches to the handcrafted builders; `m` is only used by
/// [`HandcraftedKind::SimpleScc`].
pub fn handcrafted(kind: HandcraftedKind, n: usize, m: usize) -> Result<SsgModel, GenError> {
    if n < 1 {
        return Err(GenError::TooFewStates { n, min: 1 });
    }
    match kind {
        HandcraftedKind::TviChain => Ok(tvi_chain(n)),
        HandcraftedKind::OviEasy => Ok(ovi_easy(n)),
        HandcraftedKind::OviHard => Ok(ovi_hard(n)),
        HandcraftedKind::SimpleScc => {
            if m < 1 || m > n {
                return Err(GenError::InvalidParam("need 1 <= m <= n".into()));
            }
            Ok(simple_scc(n, m))
        }
    }
}

/// Chain of `n` singleton SCCs: states `0..n` each move on with
/// probability 0.5 and self-loop otherwise; the last chain state reaches
/// the goal with 0.6 and the sink with 0.4. Every chain state has value
/// 0.6.
pub fn tvi_chain(n: usize) -> SsgModel {
    assert!(n >= 1);
    let goal = StateId(n);
    let sink = StateId(n + 1);
    let mut actions: Vec<Vec<Action>> = Vec::with_capacity(n + 2);
    for s in 0..n {
        let dist = if s + 1 < n {
            Distribution::new(vec![(StateId(s), 0.5), (StateId(s + 1), 0.5)]).unwrap()
        } else {
            Distribution::new(vec![(goal, 0.6), (sink, 0.4)]).unwrap()
        };
        actions.push(vec![Action::new("a", dist)]);
    }
    actions.push(vec![Action::new("loop", Distribution::dirac(goal))]);
    actions.push(vec![Action::new("loop", Distribution::dirac(sink))]);
    SsgModel::new(
        vec![Player::Maximizer; n + 2],
        actions,
        StateId(0),
        BTreeSet::from([goal]),
    )
}

/// Maximizer chain where every state can take an immediate 0.5 exit or
/// creep along a 0.99 self-loop; the last state's alternative is worth
/// only 0.49. The value is 0.5 everywhere, and the lower bound converges
/// in one sweep while a plain upper bound has to traverse all the
/// self-loops.
pub fn ovi_easy(n: usize) -> SsgModel {
    assert!(n >= 1);
    let goal = StateId(n);
    let sink = StateId(n + 1);
    let mut actions: Vec<Vec<Action>> = Vec::with_capacity(n + 2);
    for s in 0..n {
        let direct = Action::new(
            "direct",
            Distribution::new(vec![(goal, 0.5), (sink, 0.5)]).unwrap(),
        );
        let second = if s + 1 < n {
            Action::new(
                "creep",
                Distribution::new(vec![(StateId(s), 0.99), (StateId(s + 1), 0.01)]).unwrap(),
            )
        } else {
            Action::new(
                "worse",
                Distribution::new(vec![(goal, 0.49), (sink, 0.51)]).unwrap(),
            )
        };
        actions.push(vec![direct, second]);
    }
    actions.push(vec![Action::new("loop", Distribution::dirac(goal))]);
    actions.push(vec![Action::new("loop", Distribution::dirac(sink))]);
    SsgModel::new(
        vec![Player::Maximizer; n + 2],
        actions,
        StateId(0),
        BTreeSet::from([goal]),
    )
}

/// [`ovi_easy`] with the direct 0.5 exits removed: a Markov chain where
/// every state creeps towards the final 0.49 exit over a 0.99 self-loop.
/// The value is 0.49 everywhere and the lower bound converges slowly.
pub fn ovi_hard(n: usize) -> SsgModel {
    assert!(n >= 1);
    let goal = StateId(n);
    let sink = StateId(n + 1);
    let mut actions: Vec<Vec<Action>> = Vec::with_capacity(n + 2);
    for s in 0..n {
        let dist = if s + 1 < n {
            Distribution::new(vec![(StateId(s), 0.99), (StateId(s + 1), 0.01)]).unwrap()
        } else {
            Distribution::new(vec![(goal, 0.49), (sink, 0.51)]).unwrap()
        };
        actions.push(vec![Action::new("a", dist)]);
    }
    actions.push(vec![Action::new("loop", Distribution::dirac(goal))]);
    actions.push(vec![Action::new("loop", Distribution::dirac(sink))]);
    SsgModel::new(
        vec![Player::Maximizer; n + 2],
        actions,
        StateId(0),
        BTreeSet::from([goal]),
    )
}

/// `n` states arranged in `m` strongly connected trees plus a goal and a
/// sink. Inner nodes have one deterministic action per child; leaves
/// return to their root with probability 0.5 and otherwise move to the
/// next tree's root, or split 0.3/0.2 between goal and sink in the last
/// tree. Every tree state has value 0.6.
pub fn simple_scc(n: usize, m: usize) -> SsgModel {
    assert!(m >= 1 && m <= n);
    let goal = StateId(n);
    let sink = StateId(n + 1);
    let mut actions: Vec<Vec<Action>> = vec![Vec::new(); n + 2];

    let mut bases = Vec::with_capacity(m + 1);
    let mut base = 0;
    for t in 0..m {
        bases.push(base);
        base += n / m + usize::from(t < n % m);
    }
    bases.push(n);

    for t in 0..m {
        let (lo, hi) = (bases[t], bases[t + 1]);
        let size = hi - lo;
        let root = StateId(lo);
        for local in 0..size {
            let s = lo + local;
            let children: Vec<usize> = [2 * local + 1, 2 * local + 2]
                .into_iter()
                .filter(|&c| c < size)
                .collect();
            if children.is_empty() {
                // Leaf: return to the root or move onwards.
                let dist = if t + 1 < m {
                    let next_root = StateId(bases[t + 1]);
                    Distribution::new(vec![(root, 0.5), (next_root, 0.5)]).unwrap()
                } else {
                    Distribution::new(vec![(root, 0.5), (goal, 0.3), (sink, 0.2)]).unwrap()
                };
                actions[s].push(Action::new("return", dist));
            } else {
                for c in children {
                    actions[s].push(Action::new(
                        "down",
                        Distribution::dirac(StateId(lo + c)),
                    ));
                }
            }
        }
    }
    actions[goal.index()].push(Action::new("loop", Distribution::dirac(goal)));
    actions[sink.index()].push(Action::new("loop", Distribution::dirac(sink)));

    SsgModel::new(
        vec![Player::Maximizer; n + 2],
        actions,
        StateId(0),
        BTreeSet::from([goal]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{all_reachable_from_initial, scc_decomposition};

    #[test]
    fn fill_single_target_pool_is_dirac() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dist = fill_action(&mut rng, &[StateId(0)], None, &FillOptions::default());
        assert_eq!(dist.entries(), &[(StateId(0), 1.0)]);
    }

    #[test]
    fn fill_sums_to_exactly_one() {
        let targets: Vec<StateId> = (0..20).map(StateId).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let dist = fill_action(&mut rng, &targets, None, &FillOptions::default());
            assert_eq!(dist.sum(), 1.0);
            assert!(dist.entries().iter().all(|&(_, p)| p > 0.0));
        }
    }

    #[test]
    fn fill_respects_transition_cap() {
        let targets: Vec<StateId> = (0..20).map(StateId).collect();
        let opts = FillOptions {
            max_transitions: Some(2),
            min_prob: 1e-6,
            strict_min_prob: false,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let dist = fill_action(&mut rng, &targets, None, &opts);
            assert!(dist.len() <= 2);
            assert_eq!(dist.sum(), 1.0);
        }
    }

    #[test]
    fn only_the_closing_entry_may_undercut_min_prob() {
        let mut params = GenParams::new(20, 5);
        params.min_prob = 0.2;
        let model = generate_random(&params).unwrap();
        for s in model.states() {
            for action in model.actions(s) {
                let below = action
                    .distribution
                    .entries()
                    .iter()
                    .filter(|&&(_, p)| p < params.min_prob)
                    .count();
                assert!(below <= 1, "{s}: {:?}", action.distribution.entries());
            }
        }
    }

    #[test]
    fn strict_mode_redraws_small_closing_entries() {
        let mut params = GenParams::new(20, 5);
        params.min_prob = 0.2;
        params.strict_min_prob = true;
        let model = generate_random(&params).unwrap();
        for s in model.states() {
            for action in model.actions(s) {
                // Backward fills start from scratch, so re-drawing always
                // finds a floor-respecting distribution. Forward fills
                // carry a fixed forced entry; when that entry alone
                // leaves less than the floor, re-drawing gives up and
                // accepts the single closing violation.
                if action.label.starts_with('b') {
                    for &(_, p) in action.distribution.entries() {
                        assert!(p >= params.min_prob || p == 1.0);
                    }
                } else {
                    let below = action
                        .distribution
                        .entries()
                        .iter()
                        .filter(|&&(_, p)| p < params.min_prob)
                        .count();
                    assert!(below <= 1);
                }
            }
        }
    }

    #[test]
    fn random_model_is_valid_and_reachable() {
        let model = generate_random(&GenParams::new(5, 42)).unwrap();
        assert_eq!(model.num_states(), 5);
        assert!(model.validate().is_ok());
        assert!(all_reachable_from_initial(&model));
        assert_eq!(model.goals().len(), 1);
    }

    #[test]
    fn two_state_model_reaches_goal_directly() {
        let model = generate_random(&GenParams::new(2, 3)).unwrap();
        assert!(model
            .actions(StateId(0))
            .iter()
            .any(|a| a.distribution.support().any(|t| t == StateId(1))));
    }

    #[test]
    fn same_seed_reproduces_model() {
        let params = GenParams::new(17, 99);
        assert_eq!(
            generate_random(&params).unwrap(),
            generate_random(&params).unwrap()
        );
    }

    #[test]
    fn tree_has_k_actions_on_inner_nodes() {
        let model = generate_tree(&TreeParams { n: 7, k: 2, seed: 5 }).unwrap();
        assert!(model.validate().is_ok());
        assert!(all_reachable_from_initial(&model));
        // Perfect binary shape: states 0..3 are inner with exactly two
        // actions each (6 is the absorbing goal).
        for s in 0..3 {
            assert_eq!(model.actions(StateId(s)).len(), 2, "state {s}");
        }
    }

    #[test]
    fn degenerate_tree_rejected() {
        assert!(matches!(
            generate_tree(&TreeParams { n: 1, k: 2, seed: 0 }),
            Err(GenError::TooFewStates { .. })
        ));
    }

    #[test]
    fn scc_chain_produces_requested_blocks() {
        let model = generate_scc_chain(&SccChainParams {
            n: 30,
            scc_size_min: 10,
            scc_size_max: 10,
            seed: 11,
        })
        .unwrap();
        assert!(model.validate().is_ok());
        assert!(all_reachable_from_initial(&model));
        let scc = scc_decomposition(&model);
        let non_trivial: Vec<usize> = scc
            .components()
            .iter()
            .map(|c| c.len())
            .filter(|&l| l > 1)
            .collect();
        assert_eq!(non_trivial, vec![10, 10, 10]);
    }

    #[test]
    fn singleton_scc_chain_blocks() {
        let model = generate_scc_chain(&SccChainParams {
            n: 6,
            scc_size_min: 1,
            scc_size_max: 1,
            seed: 2,
        })
        .unwrap();
        assert!(model.validate().is_ok());
        let scc = scc_decomposition(&model);
        assert!(scc.components().iter().all(|c| c.len() == 1));
    }

    #[test]
    fn handcrafted_shapes() {
        let chain = tvi_chain(3);
        assert!(chain.validate().is_ok());
        assert_eq!(chain.num_states(), 5);

        let easy = ovi_easy(4);
        assert!(easy.validate().is_ok());
        assert_eq!(easy.actions(StateId(0)).len(), 2);
        assert_eq!(easy.actions(StateId(3)).len(), 2);

        let hard = ovi_hard(4);
        assert!(hard.validate().is_ok());
        assert!(hard.states().all(|s| hard.actions(s).len() == 1));

        let scc = simple_scc(10, 2);
        assert!(scc.validate().is_ok());
        let decomposition = scc_decomposition(&scc);
        let non_trivial = decomposition
            .components()
            .iter()
            .filter(|c| c.len() > 1)
            .count();
        assert_eq!(non_trivial, 2);

        assert!(handcrafted(HandcraftedKind::SimpleScc, 4, 9).is_err());
    }
}
