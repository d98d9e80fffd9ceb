//! Solver workbench for simple stochastic games with reachability
//! objectives.
//!
//! The crate provides the game model and its text format, the graph
//! machinery (state classification, SCC/MEC decomposition, simple-end-
//! component detection), the Bellman and deflating operators, a family of
//! solvers (value iteration, bounded VI, optimistic VI, topological and
//! precise topological VI, strategy iteration), seeded random model
//! generators and a structural feature analyzer.

pub mod analysis;
pub mod bellman;
pub mod fixtures;
pub mod format;
pub mod generate;
pub mod graph;
pub mod model;
pub mod solvers;
pub mod value;

pub use bellman::{bellman_update, deflate_update};
pub use graph::{
    best_exit, classify_states, find_sec_candidates, forced_zero_states, mec_decomposition,
    scc_decomposition, EcCandidate, SccDecomposition, StateClasses,
};
pub use model::{
    induced_markov_chain, Action, Distribution, MarkovChain, MaxStrategy, MinStrategy, Player,
    SsgModel, StateId,
};
pub use value::{diff, diff_plus, DiffMode, ValueFunction};
