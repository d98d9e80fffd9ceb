//! Solution algorithms: value iteration with the naive criterion,
//! bounded VI with deflating, optimistic VI, topological variants, exact
//! Markov-chain solving and strategy iteration.

mod iterative;
mod linear;
mod strategy;
mod topological;

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::graph::StateClasses;
use crate::model::{SsgModel, StateId, StrategyError};
use crate::value::{DiffMode, ValueFunction};

pub use linear::{solve_markov_chain, LinearError};
pub use strategy::{extract_strategies, local_optimality_check, solve_si};
pub use topological::{solve_ptvi, solve_topological, InnerSolver, PtviInner};

/// Tolerance for optimality checks and strategy switches; separates the
/// double-precision noise of exact Markov-chain solves from the 1e-6
/// solver precision.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// Shared solver configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Target precision of the returned bounds.
    pub epsilon: f64,
    /// Precision of the naive stopping criterion (VI and the OVI
    /// iteration phase); defaults to `epsilon`.
    pub naive_epsilon: f64,
    pub mode: DiffMode,
    /// Deflate the upper bound every this many BVI iterations. A value
    /// above `max_iterations` effectively disables deflating.
    pub deflate_every: usize,
    pub gauss_seidel: bool,
    /// Safety cap on the total number of sweeps of one solver run.
    pub max_iterations: u64,
    pub timeout: Option<Duration>,
    /// Abort an OVI verification phase early when the update dominates
    /// the candidate pointwise, adopting it as the new lower bound.
    /// Without this a failed verification phase always runs its full
    /// `ceil(1/naive_epsilon)` iterations.
    pub ovi_lower_check: bool,
}

impl SolverConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            naive_epsilon: epsilon,
            ..Self::default()
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            naive_epsilon: 1e-6,
            mode: DiffMode::Absolute,
            deflate_every: 100,
            gauss_seidel: false,
            max_iterations: 100_000_000,
            timeout: None,
            ovi_lower_check: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    /// Bounds meet the requested precision.
    Converged,
    /// Exact values, lower equals upper.
    Precise,
    Timeout,
    IterationCap,
    /// Bound width stopped shrinking at machine precision while still
    /// above the requested precision.
    Stalled,
}

impl SolverStatus {
    pub fn is_success(self) -> bool {
        matches!(self, SolverStatus::Converged | SolverStatus::Precise)
    }
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolverStatus::Converged => "converged",
            SolverStatus::Precise => "precise",
            SolverStatus::Timeout => "timeout",
            SolverStatus::IterationCap => "iteration-cap",
            SolverStatus::Stalled => "stalled",
        };
        f.write_str(s)
    }
}

/// Outcome of a solver run.
#[derive(Debug, Clone)]
pub struct SolverResult {
    pub lower: ValueFunction,
    pub upper: ValueFunction,
    pub status: SolverStatus,
    /// Outer sweeps performed.
    pub iterations: u64,
    /// Per-state Bellman backups performed across all sweeps.
    pub bellman_backups: u64,
    /// Verification phases entered (optimistic VI only).
    pub verification_phases: u64,
    /// Per-SCC local optimality checks that succeeded (precise
    /// topological solving only).
    pub local_checks_passed: u64,
    /// Strategy-iteration fallbacks taken (precise topological solving
    /// only).
    pub si_fallbacks: u64,
    pub wall_time: Duration,
    pub diagnostics: Vec<String>,
}

impl SolverResult {
    pub fn bounds_at(&self, s: StateId) -> (f64, f64) {
        (self.lower[s], self.upper[s])
    }

    pub fn width_at(&self, s: StateId) -> f64 {
        self.upper[s] - self.lower[s]
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("{0}")]
    Linear(#[from] LinearError),
    #[error("{0}")]
    Strategy(#[from] StrategyError),
    #[error("internal: {0}")]
    Internal(String),
}

/// Wall-clock and sweep budget shared by the phases of one solver run.
pub(crate) struct Budget {
    start: Instant,
    timeout: Option<Duration>,
    max_iterations: u64,
    pub iterations: u64,
    pub backups: u64,
}

impl Budget {
    pub fn new(cfg: &SolverConfig) -> Self {
        Self {
            start: Instant::now(),
            timeout: cfg.timeout,
            max_iterations: cfg.max_iterations,
            iterations: 0,
            backups: 0,
        }
    }

    pub fn charge_sweep(&mut self, states: usize) {
        self.iterations += 1;
        self.backups += states as u64;
    }

    /// Returns the terminating status once the budget is spent.
    pub fn exhausted(&self) -> Option<SolverStatus> {
        if self.iterations >= self.max_iterations {
            return Some(SolverStatus::IterationCap);
        }
        if let Some(t) = self.timeout {
            if self.start.elapsed() >= t {
                return Some(SolverStatus::Timeout);
            }
        }
        None
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

/// Lower-bound start: 1 on goals, 0 elsewhere.
pub(crate) fn lower_init(model: &SsgModel) -> ValueFunction {
    let mut f = ValueFunction::zeros(model.num_states());
    for &g in model.goals() {
        f[g] = 1.0;
    }
    f
}

/// Upper-bound start: 0 on sinks, 1 elsewhere.
pub(crate) fn upper_init(model: &SsgModel, classes: &StateClasses) -> ValueFunction {
    let mut f = ValueFunction::constant(model.num_states(), 1.0);
    for s in model.states() {
        if classes.is_sink(s) {
            f[s] = 0.0;
        }
    }
    f
}

pub(crate) fn finish(
    lower: ValueFunction,
    upper: ValueFunction,
    status: SolverStatus,
    budget: &Budget,
) -> SolverResult {
    SolverResult {
        lower,
        upper,
        status,
        iterations: budget.iterations,
        bellman_backups: budget.backups,
        verification_phases: 0,
        local_checks_passed: 0,
        si_fallbacks: 0,
        wall_time: budget.elapsed(),
        diagnostics: Vec::new(),
    }
}

/// Classic value iteration from below with the naive stopping criterion.
///
/// Stops when one Bellman update changes no state by more than the naive
/// precision. Fast, but the result carries no precision guarantee; the
/// returned upper bound simply equals the lower bound.
pub fn solve_vi(
    model: &SsgModel,
    classes: &StateClasses,
    cfg: &SolverConfig,
) -> Result<SolverResult, SolveError> {
    let mut budget = Budget::new(cfg);
    let scope = classes.unknown();
    let mut lower = lower_init(model);
    let status = iterative::vi_to_naive(
        model,
        &scope,
        &mut lower,
        cfg.naive_epsilon,
        cfg,
        &mut budget,
    );
    let upper = lower.clone();
    Ok(finish(lower, upper, status, &budget))
}

/// Bounded value iteration: converging lower and upper bounds with
/// periodic deflating of simple-end-component candidates; terminates
/// when the per-state gap is at most epsilon, which guarantees
/// `lower <= value <= upper`.
pub fn solve_bvi(
    model: &SsgModel,
    classes: &StateClasses,
    cfg: &SolverConfig,
) -> Result<SolverResult, SolveError> {
    let mut budget = Budget::new(cfg);
    let scope = classes.unknown();
    let mut lower = lower_init(model);
    let mut upper = upper_init(model, classes);
    let outcome = iterative::bvi_scoped(
        model,
        classes,
        &scope,
        &mut lower,
        &mut upper,
        cfg,
        false,
        &mut budget,
    );
    let mut result = finish(lower, upper, outcome.status, &budget);
    result.diagnostics = outcome.diagnostics;
    Ok(result)
}

/// Optimistic value iteration: run VI to the naive criterion, guess an
/// upper bound slightly above the iterate, and verify it inductively
/// with the deflating operator; on failure retry with halved naive
/// precision. On success `lower <= value <= upper` with a gap of at most
/// epsilon.
pub fn solve_ovi(
    model: &SsgModel,
    classes: &StateClasses,
    cfg: &SolverConfig,
) -> Result<SolverResult, SolveError> {
    let mut budget = Budget::new(cfg);
    let scope = classes.unknown();
    let mut lower = lower_init(model);
    let mut upper = upper_init(model, classes);
    let outcome = iterative::ovi_scoped(
        model,
        classes,
        &scope,
        &mut lower,
        &mut upper,
        cfg,
        &mut budget,
    );
    let mut result = finish(lower, upper, outcome.status, &budget);
    result.verification_phases = outcome.verification_phases;
    result.diagnostics = outcome.diagnostics;
    Ok(result)
}
