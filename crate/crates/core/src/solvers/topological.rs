//! Topological solving: process SCCs bottom-up, freezing the values of
//! already-solved components. The plain variant runs an epsilon-solver
//! per component and inherits its imprecision; the precise variant
//! upgrades every component to exact values by guessing strategies,
//! solving the induced Markov chain and verifying local optimality, with
//! strategy iteration as the fallback.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::graph::{classify_states, scc_decomposition, StateClasses};
use crate::model::{
    Action, Distribution, MarkovChain, MaxStrategy, MinStrategy, Player, SsgModel, StateId,
};
use crate::solvers::strategy::{chain_zero_hint, extract_for};
use crate::solvers::{
    finish, iterative, linear::solve_markov_chain, lower_init, solve_si, upper_init, Budget,
    SolveError, SolverConfig, SolverResult, SolverStatus, CHECK_TOLERANCE,
};
use crate::value::ValueFunction;

/// Epsilon-solver run inside each component of the topological solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSolver {
    Vi,
    Bvi,
    Ovi,
}

/// Stopping criterion of the per-component iteration in precise
/// topological solving: plain VI with the naive criterion, or bounded VI
/// with the epsilon guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtviInner {
    Naive,
    Bounded,
}

fn component_label(scope: &[StateId]) -> String {
    format!(
        "component {}..{} ({} states)",
        scope[0],
        scope[scope.len() - 1],
        scope.len()
    )
}

/// Solves the game one SCC at a time in reverse topological order,
/// freezing solved components at their approximate values. Imprecision
/// aggregates along SCC chains; when a component's bound width stops
/// shrinking at machine precision the run ends with a stall report.
pub fn solve_topological(
    model: &SsgModel,
    classes: &StateClasses,
    cfg: &SolverConfig,
    inner: InnerSolver,
) -> Result<SolverResult, SolveError> {
    let mut budget = Budget::new(cfg);
    let scc = scc_decomposition(model);
    let mut lower = lower_init(model);
    let mut upper = upper_init(model, classes);
    let mut verification_phases = 0u64;
    let mut diagnostics: Vec<String> = Vec::new();

    for component in scc.reverse_topological() {
        let scope: Vec<StateId> = component
            .iter()
            .copied()
            .filter(|&s| classes.is_unknown(s))
            .collect();
        if scope.is_empty() {
            continue;
        }
        let status = match inner {
            InnerSolver::Vi => {
                let status = iterative::vi_to_naive(
                    model,
                    &scope,
                    &mut lower,
                    cfg.naive_epsilon,
                    cfg,
                    &mut budget,
                );
                if status == SolverStatus::Converged {
                    for &s in &scope {
                        upper[s] = lower[s];
                    }
                }
                status
            }
            InnerSolver::Bvi => {
                let outcome = iterative::bvi_scoped(
                    model,
                    classes,
                    &scope,
                    &mut lower,
                    &mut upper,
                    cfg,
                    true,
                    &mut budget,
                );
                diagnostics.extend(outcome.diagnostics);
                outcome.status
            }
            InnerSolver::Ovi => {
                let outcome = iterative::ovi_scoped(
                    model,
                    classes,
                    &scope,
                    &mut lower,
                    &mut upper,
                    cfg,
                    &mut budget,
                );
                verification_phases += outcome.verification_phases;
                diagnostics.extend(outcome.diagnostics);
                outcome.status
            }
        };
        if status != SolverStatus::Converged {
            diagnostics.push(format!("{} ended as {}", component_label(&scope), status));
            let mut result = finish(lower, upper, status, &budget);
            result.verification_phases = verification_phases;
            result.diagnostics = diagnostics;
            return Ok(result);
        }
    }
    let mut result = finish(lower, upper, SolverStatus::Converged, &budget);
    result.verification_phases = verification_phases;
    result.diagnostics = diagnostics;
    Ok(result)
}

/// The induced chain of one component, with transitions to solved
/// states folded into a virtual goal/sink pair weighted by their exact
/// values.
struct SubChain {
    chain: MarkovChain,
    index_of: BTreeMap<StateId, usize>,
}

fn folded_entries(
    mass: &BTreeMap<StateId, f64>,
    index_of: &BTreeMap<StateId, usize>,
    values: &ValueFunction,
    virtual_goal: usize,
    virtual_sink: usize,
) -> Vec<(StateId, f64)> {
    let mut goal_mass = 0.0;
    let mut sink_mass = 0.0;
    let mut entries: Vec<(StateId, f64)> = Vec::new();
    for (&target, &p) in mass {
        if let Some(&i) = index_of.get(&target) {
            entries.push((StateId(i), p));
        } else {
            let v = values[target];
            goal_mass += p * v;
            sink_mass += p * (1.0 - v);
        }
    }
    if goal_mass > 0.0 {
        entries.push((StateId(virtual_goal), goal_mass));
    }
    if sink_mass > 0.0 {
        entries.push((StateId(virtual_sink), sink_mass));
    }
    entries
}

fn strategy_mass(
    model: &SsgModel,
    s: StateId,
    sigma: &MaxStrategy,
    tau: &MinStrategy,
) -> BTreeMap<StateId, f64> {
    let mut mass: BTreeMap<StateId, f64> = BTreeMap::new();
    match model.owner(s) {
        Player::Minimizer => {
            let a = tau.get(s).expect("strategy covers scope");
            for &(t, p) in model.actions(s)[a].distribution.entries() {
                *mass.entry(t).or_insert(0.0) += p;
            }
        }
        Player::Maximizer => {
            let support = sigma.get(s).expect("strategy covers scope");
            let w = 1.0 / support.len() as f64;
            for &a in support {
                for &(t, p) in model.actions(s)[a].distribution.entries() {
                    *mass.entry(t).or_insert(0.0) += w * p;
                }
            }
        }
    }
    mass
}

fn build_sub_chain(
    model: &SsgModel,
    scope: &[StateId],
    values: &ValueFunction,
    sigma: &MaxStrategy,
    tau: &MinStrategy,
) -> SubChain {
    let k = scope.len();
    let index_of: BTreeMap<StateId, usize> =
        scope.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let (virtual_goal, virtual_sink) = (k, k + 1);
    let mut rows: Vec<Distribution> = Vec::with_capacity(k + 2);
    for &s in scope {
        let mass = strategy_mass(model, s, sigma, tau);
        let entries = folded_entries(&mass, &index_of, values, virtual_goal, virtual_sink);
        rows.push(Distribution::new(entries).expect("folded row is a distribution"));
    }
    rows.push(Distribution::dirac(StateId(virtual_goal)));
    rows.push(Distribution::dirac(StateId(virtual_sink)));
    SubChain {
        chain: MarkovChain {
            rows,
            goals: BTreeSet::from([StateId(virtual_goal)]),
        },
        index_of,
    }
}

/// The component as a standalone game with exact external values folded
/// into a virtual goal/sink pair; used to run strategy iteration when
/// the local check fails.
fn build_sub_model(
    model: &SsgModel,
    scope: &[StateId],
    values: &ValueFunction,
) -> (SsgModel, BTreeMap<StateId, usize>) {
    let k = scope.len();
    let index_of: BTreeMap<StateId, usize> =
        scope.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let (virtual_goal, virtual_sink) = (k, k + 1);
    let mut owner: Vec<Player> = Vec::with_capacity(k + 2);
    let mut actions: Vec<Vec<Action>> = Vec::with_capacity(k + 2);
    for &s in scope {
        owner.push(model.owner(s));
        let folded = model
            .actions(s)
            .iter()
            .map(|action| {
                let mut mass: BTreeMap<StateId, f64> = BTreeMap::new();
                for &(t, p) in action.distribution.entries() {
                    *mass.entry(t).or_insert(0.0) += p;
                }
                let entries =
                    folded_entries(&mass, &index_of, values, virtual_goal, virtual_sink);
                Action::new(
                    action.label.clone(),
                    Distribution::new(entries).expect("folded action is a distribution"),
                )
            })
            .collect();
        actions.push(folded);
    }
    owner.push(Player::Maximizer);
    actions.push(vec![Action::new(
        "loop",
        Distribution::dirac(StateId(virtual_goal)),
    )]);
    owner.push(Player::Maximizer);
    actions.push(vec![Action::new(
        "loop",
        Distribution::dirac(StateId(virtual_sink)),
    )]);
    let sub = SsgModel::new(
        owner,
        actions,
        StateId(0),
        BTreeSet::from([StateId(virtual_goal)]),
    );
    (sub, index_of)
}

fn check_scope(
    model: &SsgModel,
    scope: &[StateId],
    sigma: &MaxStrategy,
    tau: &MinStrategy,
    value_of: impl Fn(StateId) -> f64,
) -> bool {
    scope.iter().all(|&s| {
        let values: Vec<f64> = model
            .actions(s)
            .iter()
            .map(|a| {
                a.distribution
                    .entries()
                    .iter()
                    .map(|&(t, p)| p * value_of(t))
                    .sum()
            })
            .collect();
        match model.owner(s) {
            Player::Maximizer => {
                let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                sigma
                    .get(s)
                    .expect("strategy covers scope")
                    .iter()
                    .all(|&a| values[a] >= best - CHECK_TOLERANCE)
            }
            Player::Minimizer => {
                let best = values.iter().copied().fold(f64::INFINITY, f64::min);
                values[tau.get(s).expect("strategy covers scope")] <= best + CHECK_TOLERANCE
            }
        }
    })
}

/// Precise topological solving: per component, iterate to the requested
/// precision, extract both players' strategies, solve the induced chain
/// exactly, and adopt the exact values if the strategies pass the local
/// optimality check; otherwise fall back to strategy iteration seeded
/// with the guessed Minimizer strategy. Returns the exact value
/// function.
pub fn solve_ptvi(
    model: &SsgModel,
    classes: &StateClasses,
    cfg: &SolverConfig,
    inner: PtviInner,
) -> Result<SolverResult, SolveError> {
    let mut budget = Budget::new(cfg);
    let scc = scc_decomposition(model);
    let mut values = ValueFunction::zeros(model.num_states());
    for &g in model.goals() {
        values[g] = 1.0;
    }
    let mut lower = lower_init(model);
    let mut upper = upper_init(model, classes);
    let mut local_checks_passed = 0u64;
    let mut si_fallbacks = 0u64;
    let mut diagnostics: Vec<String> = Vec::new();

    for component in scc.reverse_topological() {
        let scope: Vec<StateId> = component
            .iter()
            .copied()
            .filter(|&s| classes.is_unknown(s))
            .collect();
        if scope.is_empty() {
            continue;
        }

        let status = match inner {
            PtviInner::Naive => {
                let status = iterative::vi_to_naive(
                    model,
                    &scope,
                    &mut lower,
                    cfg.naive_epsilon,
                    cfg,
                    &mut budget,
                );
                if status == SolverStatus::Converged {
                    for &s in &scope {
                        upper[s] = lower[s];
                    }
                }
                status
            }
            PtviInner::Bounded => {
                let outcome = iterative::bvi_scoped(
                    model,
                    classes,
                    &scope,
                    &mut lower,
                    &mut upper,
                    cfg,
                    true,
                    &mut budget,
                );
                diagnostics.extend(outcome.diagnostics);
                outcome.status
            }
        };
        if status != SolverStatus::Converged {
            diagnostics.push(format!("{} ended as {}", component_label(&scope), status));
            let mut result = finish(lower, upper, status, &budget);
            result.local_checks_passed = local_checks_passed;
            result.si_fallbacks = si_fallbacks;
            result.diagnostics = diagnostics;
            return Ok(result);
        }

        let (sigma, tau) = extract_for(model, scope.iter().copied(), &lower, &upper);
        let sub = build_sub_chain(model, &scope, &values, &sigma, &tau);
        let hint = chain_zero_hint(&sub.chain);
        let v_mc = solve_markov_chain(&sub.chain, &hint).map_err(|e| {
            SolveError::Internal(format!("{} in {}", e, component_label(&scope)))
        })?;

        let value_of = |t: StateId| match sub.index_of.get(&t) {
            Some(&i) => v_mc[StateId(i)],
            None => values[t],
        };
        if check_scope(model, &scope, &sigma, &tau, value_of) {
            local_checks_passed += 1;
            for &s in &scope {
                let v = v_mc[StateId(sub.index_of[&s])];
                values[s] = v;
                lower[s] = v;
                upper[s] = v;
            }
        } else {
            si_fallbacks += 1;
            diagnostics.push(format!(
                "local check failed in {}; running strategy iteration",
                component_label(&scope)
            ));
            let (sub_model, index_of) = build_sub_model(model, &scope, &values);
            let sub_classes = classify_states(&sub_model);
            let mut sub_tau = MinStrategy::new();
            for (&s, &i) in &index_of {
                if model.owner(s) == Player::Minimizer {
                    sub_tau.set(StateId(i), tau.get(s).expect("strategy covers scope"));
                }
            }
            let si = solve_si(&sub_model, &sub_classes, cfg, Some(sub_tau))?;
            if si.status != SolverStatus::Precise {
                diagnostics.push(format!(
                    "strategy iteration in {} ended as {}",
                    component_label(&scope),
                    si.status
                ));
                let mut result = finish(lower, upper, si.status, &budget);
                result.local_checks_passed = local_checks_passed;
                result.si_fallbacks = si_fallbacks;
                result.diagnostics = diagnostics;
                return Ok(result);
            }
            for (&s, &i) in &index_of {
                let v = si.lower[StateId(i)];
                values[s] = v;
                lower[s] = v;
                upper[s] = v;
            }
        }
    }

    let mut result = finish(values.clone(), values, SolverStatus::Precise, &budget);
    result.local_checks_passed = local_checks_passed;
    result.si_fallbacks = si_fallbacks;
    result.diagnostics = diagnostics;
    Ok(result)
}
