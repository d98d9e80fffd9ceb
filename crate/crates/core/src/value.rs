//! Value functions and the difference functions used by all stopping
//! criteria.

use std::ops::{Index, IndexMut};

use crate::model::{Distribution, StateId};

/// How differences between estimates are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffMode {
    #[default]
    Absolute,
    Relative,
}

/// Difference between an old and a new estimate.
///
/// Absolute: `new - old`. Relative: `(new - old) / new`, with the 0/0
/// case defined as 0. Callers must not pass `new == 0` with `old != 0`
/// in relative mode.
pub fn diff(old: f64, new: f64, mode: DiffMode) -> f64 {
    match mode {
        DiffMode::Absolute => new - old,
        DiffMode::Relative => {
            if new == 0.0 && old == 0.0 {
                0.0
            } else {
                (new - old) / new
            }
        }
    }
}

/// Bumps a lower-bound estimate into an upper-bound guess.
///
/// Zero stays zero so sink states keep their exact value; everything
/// else grows by `eps` (absolute) or by the factor `1 + eps` (relative),
/// capped at 1 since values are probabilities. Rounding may push the
/// bump one ulp past `eps`; the result is nudged back down so that
/// `diff(x, diff_plus(x, eps, mode), mode) <= eps` holds exactly.
pub fn diff_plus(x: f64, eps: f64, mode: DiffMode) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut u = match mode {
        DiffMode::Absolute => (x + eps).min(1.0),
        DiffMode::Relative => (x * (1.0 + eps)).min(1.0),
    };
    while u > x && diff(x, u, mode) > eps {
        u = u.next_down();
    }
    u
}

/// A total map from states to values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    values: Vec<f64>,
}

impl ValueFunction {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    pub fn constant(n: usize, v: f64) -> Self {
        Self { values: vec![v; n] }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Expected value of this function under a distribution, i.e. the
    /// value of one action. Plain left-to-right summation.
    pub fn expected(&self, dist: &Distribution) -> f64 {
        dist.entries()
            .iter()
            .map(|&(t, p)| p * self.values[t.index()])
            .sum()
    }

    /// True when `self <= other` at every state.
    pub fn le(&self, other: &ValueFunction) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| a <= b)
    }

    /// Largest per-state difference `diff(self, other, mode)`.
    pub fn max_diff(&self, other: &ValueFunction, mode: DiffMode) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| diff(a, b, mode))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn in_unit_interval(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }
}

impl Index<StateId> for ValueFunction {
    type Output = f64;

    fn index(&self, s: StateId) -> &f64 {
        &self.values[s.index()]
    }
}

impl IndexMut<StateId> for ValueFunction {
    fn index_mut(&mut self, s: StateId) -> &mut f64 {
        &mut self.values[s.index()]
    }
}
