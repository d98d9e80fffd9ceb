//! Small hand-built games used in tests, docs and the examples.

use std::collections::BTreeSet;

use crate::model::{Action, Distribution, Player, SsgModel, StateId};

/// Four-state game: Minimizer `s0` and Maximizer `s1` form a cycle, and
/// `s1` can instead flip a fair coin between the goal `f` (state 2) and
/// the sink `z` (state 3). The value of both `s0` and `s1` is 0.5.
///
/// Layout: state 0 = s0 (Minimizer), 1 = s1 (Maximizer), 2 = f (goal),
/// 3 = z (sink). Actions of s1: index 0 = back to s0, index 1 = coin.
pub fn cycle_with_coin_exit() -> SsgModel {
    let s0 = StateId(0);
    let s1 = StateId(1);
    let f = StateId(2);
    let z = StateId(3);
    SsgModel::new(
        vec![
            Player::Minimizer,
            Player::Maximizer,
            Player::Maximizer,
            Player::Minimizer,
        ],
        vec![
            vec![Action::new("a", Distribution::dirac(s1))],
            vec![
                Action::new("b", Distribution::dirac(s0)),
                Action::new(
                    "c",
                    Distribution::new(vec![(f, 0.5), (z, 0.5)]).unwrap(),
                ),
            ],
            vec![Action::new("d", Distribution::dirac(f))],
            vec![Action::new("e", Distribution::dirac(z))],
        ],
        s0,
        BTreeSet::from([f]),
    )
}

/// One-state model whose single state is an absorbing goal.
pub fn single_goal() -> SsgModel {
    let s = StateId(0);
    SsgModel::new(
        vec![Player::Maximizer],
        vec![vec![Action::new("loop", Distribution::dirac(s))]],
        s,
        BTreeSet::from([s]),
    )
}
