//! Scoped iteration cores shared by the plain and the topological
//! solvers. A scope is the set of unknown states currently being
//! iterated; everything outside it is frozen in the value vectors.

use crate::bellman::{apply_deflation, state_backup, sweep_gauss_seidel_scoped, sweep_sync_scoped};
use crate::graph::{find_sec_candidates, EcCandidate, StateClasses};
use crate::model::{SsgModel, StateId};
use crate::solvers::{Budget, SolverConfig, SolverStatus};
use crate::value::{diff, diff_plus, ValueFunction};

/// Iterations the maximum bound width may stay bitwise identical (while
/// above epsilon) before a bounded solver gives up as stalled.
const STALL_LIMIT: u64 = 1000;

fn scope_mask(n: usize, scope: &[StateId]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &s in scope {
        mask[s.index()] = true;
    }
    mask
}

fn retain_in_scope(candidates: &mut Vec<EcCandidate>, mask: &[bool]) {
    candidates.retain(|c| c.states.iter().all(|s| mask[s.index()]));
}

/// Value iteration from below until one sweep changes no scope state by
/// more than `eps`.
pub(crate) fn vi_to_naive(
    model: &SsgModel,
    scope: &[StateId],
    lower: &mut ValueFunction,
    eps: f64,
    cfg: &SolverConfig,
    budget: &mut Budget,
) -> SolverStatus {
    if scope.is_empty() {
        return SolverStatus::Converged;
    }
    let mut next = lower.clone();
    loop {
        if let Some(status) = budget.exhausted() {
            return status;
        }
        let max_change = if cfg.gauss_seidel {
            let mut d = f64::NEG_INFINITY;
            for &s in scope {
                let old = lower[s];
                let new = state_backup(model, lower, s);
                lower[s] = new;
                d = d.max(diff(old, new, cfg.mode));
            }
            d
        } else {
            sweep_sync_scoped(model, lower, &mut next, scope);
            let mut d = f64::NEG_INFINITY;
            for &s in scope {
                d = d.max(diff(lower[s], next[s], cfg.mode));
            }
            std::mem::swap(lower, &mut next);
            d
        };
        budget.charge_sweep(scope.len());
        if max_change <= eps {
            return SolverStatus::Converged;
        }
    }
}

pub(crate) struct BviOutcome {
    pub status: SolverStatus,
    pub diagnostics: Vec<String>,
}

/// Bounded value iteration over a scope. The lower bound gets a Bellman
/// sweep every iteration; the upper bound additionally gets deflated
/// every `deflate_every` iterations, with candidates guessed from the
/// current lower bound. Terminates when the largest per-state gap is at
/// most epsilon. With `detect_stall` set (the topological solvers, whose
/// frozen exits can make the target width unreachable), the run instead
/// ends once the gap stops moving at machine precision.
pub(crate) fn bvi_scoped(
    model: &SsgModel,
    classes: &StateClasses,
    scope: &[StateId],
    lower: &mut ValueFunction,
    upper: &mut ValueFunction,
    cfg: &SolverConfig,
    detect_stall: bool,
    budget: &mut Budget,
) -> BviOutcome {
    let mut diagnostics = Vec::new();
    if scope.is_empty() {
        return BviOutcome {
            status: SolverStatus::Converged,
            diagnostics,
        };
    }
    let mask = scope_mask(model.num_states(), scope);
    let mut l_next = lower.clone();
    let mut u_next = upper.clone();
    let mut iteration: u64 = 0;
    let mut prev_width_bits: Option<u64> = None;
    let mut stall_streak: u64 = 0;

    loop {
        let width = scope
            .iter()
            .map(|&s| diff(lower[s], upper[s], cfg.mode))
            .fold(f64::NEG_INFINITY, f64::max);
        if width <= cfg.epsilon {
            return BviOutcome {
                status: SolverStatus::Converged,
                diagnostics,
            };
        }
        if detect_stall && prev_width_bits == Some(width.to_bits()) {
            stall_streak += 1;
            if stall_streak >= STALL_LIMIT {
                diagnostics.push(format!(
                    "stalled at width {width:e} over {} states ({}..{})",
                    scope.len(),
                    scope[0],
                    scope[scope.len() - 1],
                ));
                return BviOutcome {
                    status: SolverStatus::Stalled,
                    diagnostics,
                };
            }
        } else {
            prev_width_bits = Some(width.to_bits());
            stall_streak = 0;
        }
        if let Some(status) = budget.exhausted() {
            return BviOutcome {
                status,
                diagnostics,
            };
        }

        iteration += 1;
        if cfg.gauss_seidel {
            sweep_gauss_seidel_scoped(model, lower, scope);
        } else {
            sweep_sync_scoped(model, lower, &mut l_next, scope);
            std::mem::swap(lower, &mut l_next);
        }
        budget.charge_sweep(scope.len());

        if cfg.gauss_seidel {
            sweep_gauss_seidel_scoped(model, upper, scope);
        } else {
            sweep_sync_scoped(model, upper, &mut u_next, scope);
            std::mem::swap(upper, &mut u_next);
        }
        if iteration % cfg.deflate_every.max(1) as u64 == 0 {
            let mut candidates = find_sec_candidates(model, classes, lower);
            retain_in_scope(&mut candidates, &mask);
            apply_deflation(model, classes, upper, &candidates);
        }
        budget.charge_sweep(scope.len());
    }
}

pub(crate) struct OviOutcome {
    pub status: SolverStatus,
    pub verification_phases: u64,
    pub diagnostics: Vec<String>,
}

/// Optimistic value iteration over a scope.
///
/// Alternates a VI phase (to the current naive precision) with a
/// verification phase of at most `ceil(1 / naive_eps)` applications of
/// the deflating operator against the frozen lower bound. Succeeds when
/// one application does not increase anything; otherwise the naive
/// precision is halved and iteration resumes.
pub(crate) fn ovi_scoped(
    model: &SsgModel,
    classes: &StateClasses,
    scope: &[StateId],
    lower: &mut ValueFunction,
    upper: &mut ValueFunction,
    cfg: &SolverConfig,
    budget: &mut Budget,
) -> OviOutcome {
    let mut phases = 0u64;
    let mut diagnostics = Vec::new();
    if scope.is_empty() {
        return OviOutcome {
            status: SolverStatus::Converged,
            verification_phases: 0,
            diagnostics,
        };
    }
    let mask = scope_mask(model.num_states(), scope);
    let mut eps_prime = cfg.naive_epsilon;
    let mut u_next = upper.clone();

    // On failure the trivial bound 1 is still sound for unknown states.
    macro_rules! bail {
        ($status:expr) => {{
            for &s in scope {
                upper[s] = 1.0;
            }
            return OviOutcome {
                status: $status,
                verification_phases: phases,
                diagnostics,
            };
        }};
    }

    loop {
        let vi_status = vi_to_naive(model, scope, lower, eps_prime, cfg, budget);
        if vi_status != SolverStatus::Converged {
            bail!(vi_status);
        }

        for &s in scope {
            upper[s] = diff_plus(lower[s], cfg.epsilon, cfg.mode);
        }
        phases += 1;
        // The lower bound and hence the candidate set stay frozen for
        // the whole verification phase; that keeps the operator
        // monotone.
        let mut candidates = find_sec_candidates(model, classes, lower);
        retain_in_scope(&mut candidates, &mask);
        let phase_budget = (1.0 / eps_prime).ceil() as u64;

        let mut adopted = false;
        for _ in 0..phase_budget {
            if let Some(status) = budget.exhausted() {
                bail!(status);
            }
            if cfg.gauss_seidel {
                u_next.clone_from(upper);
                sweep_gauss_seidel_scoped(model, &mut u_next, scope);
            } else {
                sweep_sync_scoped(model, upper, &mut u_next, scope);
            }
            apply_deflation(model, classes, &mut u_next, &candidates);
            budget.charge_sweep(scope.len());

            if scope.iter().all(|&s| u_next[s] <= upper[s]) {
                // Inductive upper bound found; the current guess stays.
                return OviOutcome {
                    status: SolverStatus::Converged,
                    verification_phases: phases,
                    diagnostics,
                };
            }
            if cfg.ovi_lower_check && scope.iter().all(|&s| u_next[s] >= upper[s]) {
                // The guess is itself a lower bound; adopt it and retry.
                for &s in scope {
                    lower[s] = upper[s];
                }
                adopted = true;
                break;
            }
            for &s in scope {
                upper[s] = upper[s].min(u_next[s]);
            }
        }
        if adopted {
            diagnostics.push(format!(
                "verification aborted, adopted guess as lower bound at eps'={eps_prime:e}"
            ));
        }
        eps_prime /= 2.0;
    }
}
