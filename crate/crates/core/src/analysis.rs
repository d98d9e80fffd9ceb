//! Structural feature extraction for single models and corpora.

use thiserror::Error;

use crate::graph::{classify_states, mec_decomposition, scc_decomposition};
use crate::model::SsgModel;

/// The structural features of one model. Percentages are fractions in
/// `[0, 1]` of the state count (or action count for `prob_actions_pct`).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureReport {
    pub num_states: usize,
    pub sinks_pct: f64,
    pub unknown_pct: f64,
    pub min_states_pct: f64,
    pub num_max_actions: usize,
    pub avg_actions_per_state: f64,
    pub prob_actions_pct: f64,
    pub num_max_transitions: usize,
    pub avg_trans_per_action: f64,
    pub smallest_trans_prob: f64,
    /// Only MECs inside the unknown part are counted.
    pub num_mecs: usize,
    pub biggest_mec_pct: f64,
    pub avg_mec_pct: f64,
    pub num_sccs: usize,
    pub biggest_scc_pct: f64,
    pub avg_scc_pct: f64,
    /// Number of components on the longest path of the SCC DAG,
    /// endpoints included.
    pub max_scc_depth: usize,
    pub num_non_singleton_sccs: usize,
    pub smallest_scc_non_sing: usize,
    pub avg_scc_non_sing_pct: f64,
}

pub const FEATURE_NAMES: [&str; 20] = [
    "num_states",
    "sinks_pct",
    "unknown_pct",
    "min_states_pct",
    "num_max_actions",
    "avg_actions_per_state",
    "prob_actions_pct",
    "num_max_transitions",
    "avg_trans_per_action",
    "smallest_trans_prob",
    "num_mecs",
    "biggest_mec_pct",
    "avg_mec_pct",
    "num_sccs",
    "biggest_scc_pct",
    "avg_scc_pct",
    "max_scc_depth",
    "num_non_singleton_sccs",
    "smallest_scc_non_sing",
    "avg_scc_non_sing_pct",
];

impl FeatureReport {
    /// Feature values in the fixed [`FEATURE_NAMES`] order.
    pub fn values(&self) -> [f64; 20] {
        [
            self.num_states as f64,
            self.sinks_pct,
            self.unknown_pct,
            self.min_states_pct,
            self.num_max_actions as f64,
            self.avg_actions_per_state,
            self.prob_actions_pct,
            self.num_max_transitions as f64,
            self.avg_trans_per_action,
            self.smallest_trans_prob,
            self.num_mecs as f64,
            self.biggest_mec_pct,
            self.avg_mec_pct,
            self.num_sccs as f64,
            self.biggest_scc_pct,
            self.avg_scc_pct,
            self.max_scc_depth as f64,
            self.num_non_singleton_sccs as f64,
            self.smallest_scc_non_sing as f64,
            self.avg_scc_non_sing_pct,
        ]
    }
}

/// Computes all features of a valid model.
pub fn compute_features(model: &SsgModel) -> FeatureReport {
    let n = model.num_states();
    let nf = n as f64;
    let classes = classify_states(model);

    let min_states = model
        .states()
        .filter(|&s| model.owner(s) == crate::model::Player::Minimizer)
        .count();

    let mut num_actions = 0usize;
    let mut num_max_actions = 0usize;
    let mut prob_actions = 0usize;
    let mut num_transitions = 0usize;
    let mut num_max_transitions = 0usize;
    let mut smallest_trans_prob = f64::INFINITY;
    for s in model.states() {
        let actions = model.actions(s);
        num_actions += actions.len();
        num_max_actions = num_max_actions.max(actions.len());
        for action in actions {
            let len = action.distribution.len();
            num_transitions += len;
            num_max_transitions = num_max_transitions.max(len);
            if len > 1 {
                prob_actions += 1;
            }
            for &(_, p) in action.distribution.entries() {
                smallest_trans_prob = smallest_trans_prob.min(p);
            }
        }
    }

    let mecs: Vec<usize> = mec_decomposition(model)
        .into_iter()
        .filter(|m| m.states.iter().any(|&s| classes.is_unknown(s)))
        .map(|m| m.states.len())
        .collect();

    let scc = scc_decomposition(model);
    let scc_sizes: Vec<usize> = scc.components().iter().map(|c| c.len()).collect();
    let non_singleton: Vec<usize> = scc_sizes.iter().copied().filter(|&l| l > 1).collect();

    // Longest path in the component DAG, counting components.
    let mut depth = vec![1usize; scc.num_components()];
    for (ci, component) in scc.components().iter().enumerate().rev() {
        let mut best = 0usize;
        for &s in component {
            for action in model.actions(s) {
                for t in action.distribution.support() {
                    let cj = scc.rank_of(t);
                    if cj != ci {
                        best = best.max(depth[cj]);
                    }
                }
            }
        }
        depth[ci] = 1 + best;
    }
    let max_scc_depth = depth.iter().copied().max().unwrap_or(0);

    FeatureReport {
        num_states: n,
        sinks_pct: classes.sinks().len() as f64 / nf,
        unknown_pct: classes.unknown().len() as f64 / nf,
        min_states_pct: min_states as f64 / nf,
        num_max_actions,
        avg_actions_per_state: num_actions as f64 / nf,
        prob_actions_pct: prob_actions as f64 / num_actions as f64,
        num_max_transitions,
        avg_trans_per_action: num_transitions as f64 / num_actions as f64,
        smallest_trans_prob,
        num_mecs: mecs.len(),
        biggest_mec_pct: mecs.iter().copied().max().unwrap_or(0) as f64 / nf,
        avg_mec_pct: if mecs.is_empty() {
            0.0
        } else {
            mecs.iter().sum::<usize>() as f64 / mecs.len() as f64 / nf
        },
        num_sccs: scc.num_components(),
        biggest_scc_pct: scc_sizes.iter().copied().max().unwrap_or(0) as f64 / nf,
        avg_scc_pct: scc_sizes.iter().sum::<usize>() as f64 / scc_sizes.len() as f64 / nf,
        max_scc_depth,
        num_non_singleton_sccs: non_singleton.len(),
        smallest_scc_non_sing: non_singleton.iter().copied().min().unwrap_or(0),
        avg_scc_non_sing_pct: if non_singleton.is_empty() {
            0.0
        } else {
            non_singleton.iter().sum::<usize>() as f64 / non_singleton.len() as f64 / nf
        },
    }
}

/// Order statistics of one feature across a corpus.
#[derive(Debug, Clone)]
pub struct FeatureStats {
    pub mean: f64,
    pub median: f64,
    pub p10: f64,
    pub p25: f64,
    pub p75: f64,
    pub p90: f64,
    /// Values beyond the p10/p90 whiskers.
    pub outliers: Vec<f64>,
}

/// Per-feature statistics, aligned with [`FEATURE_NAMES`].
#[derive(Debug, Clone)]
pub struct CorpusStats {
    pub stats: Vec<FeatureStats>,
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("cannot aggregate an empty corpus")]
    EmptyCorpus,
}

/// Percentile by linear interpolation between closest ranks; `sorted`
/// must be ascending and nonempty.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Aggregates per-model reports into box-plot statistics per feature.
pub fn aggregate_features(reports: &[FeatureReport]) -> Result<CorpusStats, AnalysisError> {
    if reports.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let mut stats = Vec::with_capacity(FEATURE_NAMES.len());
    for i in 0..FEATURE_NAMES.len() {
        let mut values: Vec<f64> = reports.iter().map(|r| r.values()[i]).collect();
        values.sort_by(f64::total_cmp);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let p10 = percentile(&values, 0.10);
        let p90 = percentile(&values, 0.90);
        let outliers = values
            .iter()
            .copied()
            .filter(|&v| v < p10 || v > p90)
            .collect();
        stats.push(FeatureStats {
            mean,
            median: percentile(&values, 0.5),
            p10,
            p25: percentile(&values, 0.25),
            p75: percentile(&values, 0.75),
            p90,
            outliers,
        });
    }
    Ok(CorpusStats { stats })
}
