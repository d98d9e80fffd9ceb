//! The simple stochastic game data model.
//!
//! A game is a finite graph of states owned by either Maximizer or
//! Minimizer. Every state has at least one action, every action carries a
//! probability distribution over successor states, and a subset of states
//! is marked as goal. Maximizer tries to reach a goal state, Minimizer
//! tries to avoid that.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Index of a state inside its owning model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Which player resolves the choice in a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    Maximizer,
    Minimizer,
}

/// Error raised when a probability distribution cannot be built.
#[derive(Debug, Error, PartialEq)]
pub enum DistributionError {
    #[error("distribution has no entries")]
    Empty,
    #[error("duplicate target {0}")]
    DuplicateTarget(StateId),
    #[error("non-positive probability {prob} for target {target}")]
    NonPositiveProb { target: StateId, prob: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    BadSum(f64),
}

/// A probability distribution over successor states.
///
/// Entries keep their insertion order. The constructor forces the sum to
/// be exactly 1.0 in the representation by replacing the last entry's
/// probability with the complement of the running sum of all earlier
/// entries; inputs whose raw sum deviates from 1 by more than `1e-9` are
/// rejected instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    entries: Vec<(StateId, f64)>,
}

impl Distribution {
    /// Tolerance on the raw sum before the closing complement is applied.
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(entries: Vec<(StateId, f64)>) -> Result<Self, DistributionError> {
        if entries.is_empty() {
            return Err(DistributionError::Empty);
        }
        let mut seen = BTreeSet::new();
        for &(target, prob) in &entries {
            if !seen.insert(target) {
                return Err(DistributionError::DuplicateTarget(target));
            }
            if !(prob > 0.0) || !prob.is_finite() {
                return Err(DistributionError::NonPositiveProb { target, prob });
            }
        }
        let sum: f64 = entries.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(DistributionError::BadSum(sum));
        }
        let mut entries = entries;
        let prefix: f64 = entries[..entries.len() - 1].iter().map(|&(_, p)| p).sum();
        let closing = 1.0 - prefix;
        let last = entries.last_mut().expect("nonempty");
        last.1 = closing;
        if !(last.1 > 0.0) {
            return Err(DistributionError::NonPositiveProb {
                target: last.0,
                prob: last.1,
            });
        }
        Ok(Self { entries })
    }

    /// Builds a distribution without any checks; for test fixtures and the
    /// parser, which report violations through [`SsgModel::validate`].
    pub fn from_entries_unchecked(entries: Vec<(StateId, f64)>) -> Self {
        Self { entries }
    }

    /// Probability-1 transition to a single target.
    pub fn dirac(target: StateId) -> Self {
        Self {
            entries: vec![(target, 1.0)],
        }
    }

    pub fn entries(&self) -> &[(StateId, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Successor states with positive probability, in entry order.
    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.entries.iter().map(|&(t, _)| t)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| p).sum()
    }

    /// True when the distribution is a probability-1 self-loop on `state`.
    pub fn is_self_loop(&self, state: StateId) -> bool {
        self.entries.len() == 1 && self.entries[0] == (state, 1.0)
    }
}

/// A labelled action of one state. Identity is positional (state, index);
/// the label is informational only.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub label: String,
    pub distribution: Distribution,
}

impl Action {
    pub fn new(label: impl Into<String>, distribution: Distribution) -> Self {
        Self {
            label: label.into(),
            distribution,
        }
    }
}

/// A single invariant violation found by [`SsgModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    BlockingState {
        state: StateId,
    },
    DistributionSum {
        state: StateId,
        action: usize,
        sum: f64,
    },
    DuplicateTarget {
        state: StateId,
        action: usize,
        target: StateId,
    },
    NonPositiveProb {
        state: StateId,
        action: usize,
        target: StateId,
        prob: f64,
    },
    InvalidTarget {
        state: StateId,
        action: usize,
        target: StateId,
    },
    NonAbsorbingGoal {
        state: StateId,
    },
    InvalidInitial {
        state: StateId,
    },
    InvalidGoal {
        state: StateId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BlockingState { state } => write!(f, "blocking state {state}"),
            Violation::DistributionSum { state, action, sum } => {
                write!(f, "distribution sum != 1 ({sum}) at {state} action {action}")
            }
            Violation::DuplicateTarget {
                state,
                action,
                target,
            } => write!(f, "duplicate target {target} at {state} action {action}"),
            Violation::NonPositiveProb {
                state,
                action,
                target,
                prob,
            } => write!(
                f,
                "non-positive probability {prob} to {target} at {state} action {action}"
            ),
            Violation::InvalidTarget {
                state,
                action,
                target,
            } => write!(f, "target {target} out of range at {state} action {action}"),
            Violation::NonAbsorbingGoal { state } => {
                write!(f, "goal state {state} is not absorbing")
            }
            Violation::InvalidInitial { state } => write!(f, "initial state {state} out of range"),
            Violation::InvalidGoal { state } => write!(f, "goal state {state} out of range"),
        }
    }
}

/// Outcome of model validation; violations are data, not failures.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "ok")
        } else {
            for (i, v) in self.violations.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Error for out-of-range arguments to model accessors.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("state {0} out of range")]
    StateOutOfRange(StateId),
    #[error("action {action} out of range for state {state}")]
    ActionOutOfRange { state: StateId, action: usize },
}

/// An immutable simple stochastic game.
#[derive(Debug, Clone, PartialEq)]
pub struct SsgModel {
    owner: Vec<Player>,
    actions: Vec<Vec<Action>>,
    initial: StateId,
    goals: BTreeSet<StateId>,
}

impl SsgModel {
    /// Builds a model without validating the invariants; call
    /// [`SsgModel::validate`] to obtain a violation report.
    pub fn new(
        owner: Vec<Player>,
        actions: Vec<Vec<Action>>,
        initial: StateId,
        goals: BTreeSet<StateId>,
    ) -> Self {
        assert_eq!(owner.len(), actions.len(), "owner/action length mismatch");
        Self {
            owner,
            actions,
            initial,
            goals,
        }
    }

    pub fn num_states(&self) -> usize {
        self.owner.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.num_states()).map(StateId)
    }

    pub fn owner(&self, s: StateId) -> Player {
        self.owner[s.0]
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn goals(&self) -> &BTreeSet<StateId> {
        &self.goals
    }

    pub fn is_goal(&self, s: StateId) -> bool {
        self.goals.contains(&s)
    }

    pub fn actions(&self, s: StateId) -> &[Action] {
        &self.actions[s.0]
    }

    pub fn action(&self, s: StateId, a: usize) -> Result<&Action, ModelError> {
        self.actions
            .get(s.0)
            .ok_or(ModelError::StateOutOfRange(s))?
            .get(a)
            .ok_or(ModelError::ActionOutOfRange { state: s, action: a })
    }

    pub fn num_actions_total(&self) -> usize {
        self.actions.iter().map(|a| a.len()).sum()
    }

    /// Successor states of `(s, a)`, i.e. the targets with positive
    /// probability.
    pub fn post(&self, s: StateId, a: usize) -> Result<Vec<StateId>, ModelError> {
        Ok(self.action(s, a)?.distribution.support().collect())
    }

    /// Replaces every goal state's actions with a probability-1 self-loop
    /// unless it already is exactly that. Goal states are normalized like
    /// this at load and generation time.
    pub fn make_goals_absorbing(&mut self) {
        for &g in self.goals.clone().iter() {
            if g.0 < self.actions.len() {
                let already = self.actions[g.0].len() == 1
                    && self.actions[g.0][0].distribution.is_self_loop(g);
                if !already {
                    self.actions[g.0] = vec![Action::new("loop", Distribution::dirac(g))];
                }
            }
        }
    }

    /// Checks all model invariants and reports each violation with the
    /// offending state and action.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.num_states();
        if self.initial.0 >= n {
            violations.push(Violation::InvalidInitial {
                state: self.initial,
            });
        }
        for &g in &self.goals {
            if g.0 >= n {
                violations.push(Violation::InvalidGoal { state: g });
            }
        }
        for s in self.states() {
            let actions = &self.actions[s.0];
            if actions.is_empty() {
                violations.push(Violation::BlockingState { state: s });
            }
            for (ai, action) in actions.iter().enumerate() {
                let dist = &action.distribution;
                let mut seen = BTreeSet::new();
                for &(target, prob) in dist.entries() {
                    if target.0 >= n {
                        violations.push(Violation::InvalidTarget {
                            state: s,
                            action: ai,
                            target,
                        });
                    }
                    if !seen.insert(target) {
                        violations.push(Violation::DuplicateTarget {
                            state: s,
                            action: ai,
                            target,
                        });
                    }
                    if !(prob > 0.0) || !prob.is_finite() {
                        violations.push(Violation::NonPositiveProb {
                            state: s,
                            action: ai,
                            target,
                            prob,
                        });
                    }
                }
                let sum = dist.sum();
                if dist.is_empty() || sum != 1.0 {
                    violations.push(Violation::DistributionSum {
                        state: s,
                        action: ai,
                        sum,
                    });
                }
            }
            if self.is_goal(s)
                && !(self.actions[s.0].len() == 1
                    && self.actions[s.0][0].distribution.is_self_loop(s))
            {
                violations.push(Violation::NonAbsorbingGoal { state: s });
            }
        }
        ValidationReport { violations }
    }
}

/// Deterministic Minimizer strategy: one action index per Minimizer state.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MinStrategy {
    choice: BTreeMap<StateId, usize>,
}

impl MinStrategy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, s: StateId, action: usize) {
        self.choice.insert(s, action);
    }

    pub fn get(&self, s: StateId) -> Option<usize> {
        self.choice.get(&s).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, usize)> + '_ {
        self.choice.iter().map(|(&s, &a)| (s, a))
    }
}

/// Randomized Maximizer strategy: a nonempty set of action indices per
/// Maximizer state, played uniformly at random.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MaxStrategy {
    support: BTreeMap<StateId, Vec<usize>>,
}

impl MaxStrategy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores the supported actions for `s`; indices are kept sorted.
    pub fn set(&mut self, s: StateId, mut actions: Vec<usize>) {
        assert!(!actions.is_empty(), "empty strategy support for {s}");
        actions.sort_unstable();
        actions.dedup();
        self.support.insert(s, actions);
    }

    pub fn get(&self, s: StateId) -> Option<&[usize]> {
        self.support.get(&s).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, &[usize])> + '_ {
        self.support.iter().map(|(&s, v)| (s, v.as_slice()))
    }
}

/// A Markov chain: one distribution per state plus the goal set.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    pub rows: Vec<Distribution>,
    pub goals: BTreeSet<StateId>,
}

impl MarkovChain {
    pub fn num_states(&self) -> usize {
        self.rows.len()
    }
}

/// Error raised when strategies do not cover all states of their player.
#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("missing strategy entry for {0}")]
    MissingChoice(StateId),
    #[error("strategy action {action} out of range for state {state}")]
    ChoiceOutOfRange { state: StateId, action: usize },
}

/// Fixes both players' choices and returns the induced Markov chain.
///
/// A Minimizer row is the chosen action's distribution. A Maximizer row
/// is the uniform mixture of all supported actions, with duplicate
/// targets merged by summing their probabilities.
pub fn induced_markov_chain(
    model: &SsgModel,
    sigma: &MaxStrategy,
    tau: &MinStrategy,
) -> Result<MarkovChain, StrategyError> {
    let mut rows = Vec::with_capacity(model.num_states());
    for s in model.states() {
        let row = match model.owner(s) {
            Player::Minimizer => {
                let a = tau.get(s).ok_or(StrategyError::MissingChoice(s))?;
                let action = model
                    .action(s, a)
                    .map_err(|_| StrategyError::ChoiceOutOfRange { state: s, action: a })?;
                action.distribution.clone()
            }
            Player::Maximizer => {
                let support = sigma.get(s).ok_or(StrategyError::MissingChoice(s))?;
                let weight = 1.0 / support.len() as f64;
                let mut merged: BTreeMap<StateId, f64> = BTreeMap::new();
                for &a in support {
                    let action = model
                        .action(s, a)
                        .map_err(|_| StrategyError::ChoiceOutOfRange { state: s, action: a })?;
                    for &(target, prob) in action.distribution.entries() {
                        *merged.entry(target).or_insert(0.0) += weight * prob;
                    }
                }
                let entries: Vec<(StateId, f64)> = merged.into_iter().collect();
                Distribution::new(entries).expect("mixture of valid distributions is valid")
            }
        };
        rows.push(row);
    }
    Ok(MarkovChain {
        rows,
        goals: model.goals().clone(),
    })
}
