//! Exact reachability values of a Markov chain via the equation
//! approach: remove goal states and states that cannot reach a goal,
//! then solve `(I - P) x = P_goal 1` for the rest.
//!
//! Small systems go through dense Gaussian elimination with partial
//! pivoting. Larger systems use sparse elimination with a smallest-row
//! ordering and no pivoting; after removing the zero-value states the
//! matrix is a nonsingular M-matrix, for which that is stable. This is
//! what keeps the tree-shaped models with hundreds of thousands of
//! states solvable, where a dense matrix would not even fit in memory.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use thiserror::Error;

use crate::model::{MarkovChain, StateId};
use crate::value::ValueFunction;

#[derive(Debug, Error, PartialEq)]
pub enum LinearError {
    #[error("singular linear system at state {0}; the zero-value hint is likely wrong")]
    Singular(StateId),
}

const DENSE_LIMIT: usize = 256;
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Solves the chain for the probability of reaching a goal state.
///
/// `l_hint` must be exactly 0 for the states that cannot reach a goal in
/// the chain; those rows are removed before solving, which guarantees a
/// nonsingular system. Returns 1 on goals, 0 on removed states and the
/// solved probabilities elsewhere.
pub fn solve_markov_chain(
    chain: &MarkovChain,
    l_hint: &ValueFunction,
) -> Result<ValueFunction, LinearError> {
    let n = chain.num_states();
    assert_eq!(l_hint.len(), n, "hint length mismatch");

    let mut retained: Vec<usize> = Vec::new();
    let mut index_of: Vec<Option<usize>> = vec![None; n];
    for s in 0..n {
        if !chain.goals.contains(&StateId(s)) && l_hint[StateId(s)] != 0.0 {
            index_of[s] = Some(retained.len());
            retained.push(s);
        }
    }

    let m = retained.len();
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); m];
    let mut rhs = vec![0.0f64; m];
    for (i, &s) in retained.iter().enumerate() {
        rows[i].insert(i, 1.0);
        for &(target, p) in chain.rows[s].entries() {
            if chain.goals.contains(&target) {
                rhs[i] += p;
            } else if let Some(j) = index_of[target.index()] {
                *rows[i].entry(j).or_insert(0.0) -= p;
            }
        }
    }

    let x = if m <= DENSE_LIMIT {
        dense_solve(&rows, rhs, &retained)?
    } else {
        sparse_solve(rows, rhs, &retained)?
    };

    let mut out = ValueFunction::zeros(n);
    for &g in &chain.goals {
        out[g] = 1.0;
    }
    for (i, &s) in retained.iter().enumerate() {
        out[StateId(s)] = x[i];
    }
    Ok(out)
}

/// Gaussian elimination with partial pivoting on a dense copy.
fn dense_solve(
    rows: &[BTreeMap<usize, f64>],
    mut rhs: Vec<f64>,
    retained: &[usize],
) -> Result<Vec<f64>, LinearError> {
    let m = rows.len();
    let mut a = vec![vec![0.0f64; m]; m];
    for (i, row) in rows.iter().enumerate() {
        for (&j, &v) in row {
            a[i][j] = v;
        }
    }
    let mut perm: Vec<usize> = (0..m).collect();
    for col in 0..m {
        let pivot_row = (col..m)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .expect("nonempty range");
        if a[pivot_row][col].abs() < PIVOT_TOLERANCE {
            return Err(LinearError::Singular(StateId(retained[perm[pivot_row]])));
        }
        a.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        perm.swap(col, pivot_row);
        for r in col + 1..m {
            let factor = a[r][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            a[r][col] = 0.0;
            for c in col + 1..m {
                a[r][c] -= factor * a[col][c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0f64; m];
    for r in (0..m).rev() {
        let mut acc = rhs[r];
        for c in r + 1..m {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    Ok(x)
}

/// Sparse elimination picking the currently shortest row first, which
/// keeps fill-in low on the tree-like structures the generators emit.
fn sparse_solve(
    mut rows: Vec<BTreeMap<usize, f64>>,
    mut rhs: Vec<f64>,
    retained: &[usize],
) -> Result<Vec<f64>, LinearError> {
    let m = rows.len();
    let mut users: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    for (r, row) in rows.iter().enumerate() {
        for &c in row.keys() {
            users[c].insert(r);
        }
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..m)
        .map(|v| Reverse((rows[v].len(), v)))
        .collect();
    let mut eliminated = vec![false; m];
    // Eliminated rows normalized to x_v = rhs - sum(coeff * x_w).
    let mut solved_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut order: Vec<usize> = Vec::with_capacity(m);

    while order.len() < m {
        let Reverse((len, v)) = heap.pop().expect("heap tracks all pending rows");
        if eliminated[v] {
            continue;
        }
        if rows[v].len() != len {
            heap.push(Reverse((rows[v].len(), v)));
            continue;
        }
        let row = std::mem::take(&mut rows[v]);
        let pivot = row.get(&v).copied().unwrap_or(0.0);
        if pivot.abs() < PIVOT_TOLERANCE {
            return Err(LinearError::Singular(StateId(retained[v])));
        }
        let off: Vec<(usize, f64)> = row
            .iter()
            .filter(|&(&w, _)| w != v)
            .map(|(&w, &a)| (w, a / pivot))
            .collect();
        let c = rhs[v] / pivot;

        let using = std::mem::take(&mut users[v]);
        for r in using {
            if r == v || eliminated[r] {
                continue;
            }
            let Some(coeff) = rows[r].remove(&v) else {
                continue;
            };
            for &(w, a) in &off {
                let entry = rows[r].entry(w).or_insert_with(|| {
                    users[w].insert(r);
                    0.0
                });
                *entry -= coeff * a;
            }
            rhs[r] -= coeff * c;
            heap.push(Reverse((rows[r].len(), r)));
        }
        eliminated[v] = true;
        solved_rows[v] = off;
        rhs[v] = c;
        order.push(v);
    }

    let mut x = vec![0.0f64; m];
    for &v in order.iter().rev() {
        let mut acc = rhs[v];
        for &(w, a) in &solved_rows[v] {
            acc -= a * x[w];
        }
        x[v] = acc;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Distribution;

    fn hint(values: &[f64]) -> ValueFunction {
        ValueFunction::from_vec(values.to_vec())
    }

    fn chain(rows: Vec<Vec<(usize, f64)>>, goals: &[usize]) -> MarkovChain {
        MarkovChain {
            rows: rows
                .into_iter()
                .map(|r| {
                    Distribution::new(
                        r.into_iter().map(|(t, p)| (StateId(t), p)).collect(),
                    )
                    .unwrap()
                })
                .collect(),
            goals: goals.iter().map(|&g| StateId(g)).collect(),
        }
    }

    #[test]
    fn one_step_absorption() {
        let c = chain(
            vec![
                vec![(1, 0.6), (2, 0.4)],
                vec![(1, 1.0)],
                vec![(2, 1.0)],
            ],
            &[1],
        );
        let v = solve_markov_chain(&c, &hint(&[1.0, 1.0, 0.0])).unwrap();
        assert_eq!(v[StateId(0)], 0.6);
        assert_eq!(v[StateId(1)], 1.0);
        assert_eq!(v[StateId(2)], 0.0);
    }

    #[test]
    fn self_loop_renormalizes() {
        let c = chain(
            vec![
                vec![(0, 0.5), (1, 0.3), (2, 0.2)],
                vec![(1, 1.0)],
                vec![(2, 1.0)],
            ],
            &[1],
        );
        let v = solve_markov_chain(&c, &hint(&[1.0, 1.0, 0.0])).unwrap();
        assert!((v[StateId(0)] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn zero_value_state_is_removed() {
        let c = chain(
            vec![vec![(1, 1.0)], vec![(1, 1.0)], vec![(2, 1.0)]],
            &[2],
        );
        // State 0 only reaches the non-goal loop at 1.
        let v = solve_markov_chain(&c, &hint(&[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(v[StateId(0)], 0.0);
        assert_eq!(v[StateId(2)], 1.0);
    }

    #[test]
    fn wrong_hint_is_reported_singular() {
        let c = chain(
            vec![vec![(1, 1.0)], vec![(0, 1.0)], vec![(2, 1.0)]],
            &[2],
        );
        // States 0 and 1 cycle forever; claiming they reach the goal
        // leaves a singular block.
        let err = solve_markov_chain(&c, &hint(&[1.0, 1.0, 0.0])).unwrap_err();
        assert!(matches!(err, LinearError::Singular(_)));
    }

    #[test]
    fn sparse_path_matches_closed_form() {
        // 400 states in a creeping chain, value 0.6 everywhere: each
        // state loops with 0.5 and advances with 0.5 towards a final
        // 0.6/0.4 split. Large enough to exercise the sparse path.
        let n = 400;
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        for s in 0..n {
            if s + 1 < n {
                rows.push(vec![(s, 0.5), (s + 1, 0.5)]);
            } else {
                rows.push(vec![(n, 0.6), (n + 1, 0.4)]);
            }
        }
        rows.push(vec![(n, 1.0)]);
        rows.push(vec![(n + 1, 1.0)]);
        let c = chain(rows, &[n]);
        let mut h = vec![1.0; n + 2];
        h[n + 1] = 0.0;
        let v = solve_markov_chain(&c, &hint(&h)).unwrap();
        for s in 0..n {
            assert!(
                (v[StateId(s)] - 0.6).abs() < 1e-12,
                "state {s}: {}",
                v[StateId(s)]
            );
        }
    }
}
