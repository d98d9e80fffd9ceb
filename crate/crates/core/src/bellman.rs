//! The Bellman operator and its deflating variant.

use crate::graph::{best_exit, find_sec_candidates, EcCandidate, StateClasses};
use crate::model::{Player, SsgModel, StateId};
use crate::value::ValueFunction;

/// One-step backup of a single state: max/min over its actions of the
/// expected value of `f`.
pub(crate) fn state_backup(model: &SsgModel, f: &ValueFunction, s: StateId) -> f64 {
    let actions = model.actions(s);
    let mut iter = actions.iter().map(|a| f.expected(&a.distribution));
    let first = iter.next().expect("non-blocking model");
    match model.owner(s) {
        Player::Maximizer => iter.fold(first, f64::max),
        Player::Minimizer => iter.fold(first, f64::min),
    }
}

/// Synchronous sweep over `scope`, reading `src` and writing `dst`.
/// States outside the scope are left untouched in `dst`.
pub(crate) fn sweep_sync_scoped(
    model: &SsgModel,
    src: &ValueFunction,
    dst: &mut ValueFunction,
    scope: &[StateId],
) {
    for &s in scope {
        dst[s] = state_backup(model, src, s);
    }
}

/// Gauss-Seidel sweep over `scope` in ascending state order; every update
/// is immediately visible to later states.
pub(crate) fn sweep_gauss_seidel_scoped(
    model: &SsgModel,
    f: &mut ValueFunction,
    scope: &[StateId],
) {
    for &s in scope {
        f[s] = state_backup(model, f, s);
    }
}

/// Applies the Bellman operator once. Goal states stay 1 and sink states
/// stay 0; unknown states get the max/min over their actions of the
/// expected value. With `gauss_seidel` set, states are updated in
/// ascending id order and each update is immediately visible; otherwise
/// all states read the old function.
pub fn bellman_update(
    model: &SsgModel,
    classes: &StateClasses,
    f: &ValueFunction,
    gauss_seidel: bool,
) -> ValueFunction {
    let scope: Vec<StateId> = classes.unknown();
    let mut out = f.clone();
    for s in model.states() {
        if classes.is_goal(s) {
            out[s] = 1.0;
        } else if classes.is_sink(s) {
            out[s] = 0.0;
        }
    }
    if gauss_seidel {
        sweep_gauss_seidel_scoped(model, &mut out, &scope);
    } else {
        sweep_sync_scoped(model, f, &mut out, &scope);
    }
    out
}

/// Lowers every unknown state of each candidate to the candidate's best
/// exit under the current function. Candidates are processed in order;
/// the min keeps the operation monotone.
pub(crate) fn apply_deflation(
    model: &SsgModel,
    classes: &StateClasses,
    f: &mut ValueFunction,
    candidates: &[EcCandidate],
) {
    for candidate in candidates {
        let exit = best_exit(model, &candidate.states, f);
        for &s in &candidate.states {
            if classes.is_unknown(s) {
                f[s] = f[s].min(exit);
            }
        }
    }
}

/// The deflating Bellman operator: a Bellman update of `upper` followed
/// by lowering every simple-end-component candidate (guessed from
/// `lower`) to its best exit, computed on the post-update function.
///
/// Callers that must keep the candidate set fixed over several
/// applications pass the same frozen `lower` each time.
pub fn deflate_update(
    model: &SsgModel,
    classes: &StateClasses,
    upper: &ValueFunction,
    lower: &ValueFunction,
    gauss_seidel: bool,
) -> ValueFunction {
    let candidates = find_sec_candidates(model, classes, lower);
    let mut out = bellman_update(model, classes, upper, gauss_seidel);
    apply_deflation(model, classes, &mut out, &candidates);
    out
}
