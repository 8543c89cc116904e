use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::beta::{BetaEstimate, EpochLengthStats};
use crate::cab::Lemma1Check;
use crate::zerogap::ZeroGapResult;

/// Sample mean and standard error `sqrt(s^2 / n)`; the error is 0 below two samples.
pub fn mean_and_se(xs: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = xs.into_iter().collect();
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let s2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (s2 / n).sqrt())
}

/// Per-replication results keyed by replication index.
///
/// Merging is commutative and associative with [`ReplicationSink::new`] as
/// unit, so results can arrive in any order; reductions always walk the
/// entries in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSink<T> {
    items: BTreeMap<u64, T>,
}

impl<T> Default for ReplicationSink<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> ReplicationSink<T> {
    pub fn new() -> Self {
        ReplicationSink { items: BTreeMap::new() }
    }

    pub fn push(&mut self, rep: u64, item: T) {
        let prev = self.items.insert(rep, item);
        assert!(prev.is_none(), "replication {rep} recorded twice");
    }

    pub fn merge(mut self, other: ReplicationSink<T>) -> Self {
        for (rep, item) in other.items {
            self.push(rep, item);
        }
        self
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn into_ordered(self) -> Vec<T> {
        self.items.into_values().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStat {
    pub checkpoint: u64,
    pub mean: f64,
    pub std_error: f64,
}

/// Reference curves at a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundOverlay {
    pub checkpoint: u64,
    pub upper: Option<f64>,
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rep: u64,
    pub seed: u64,
    /// Regret at each aggregate checkpoint.
    pub regret: Vec<f64>,
    pub epochs: u64,
    pub plays_on_type2: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretAggregate {
    pub algo: String,
    pub tuning: String,
    pub checkpoints: Vec<CheckpointStat>,
    pub overlays: Vec<BoundOverlay>,
    pub runs: Vec<RunSummary>,
}

impl RegretAggregate {
    pub fn at(&self, checkpoint: u64) -> Option<&CheckpointStat> {
        self.checkpoints.iter().find(|c| c.checkpoint == checkpoint)
    }

    pub fn final_stat(&self) -> Option<&CheckpointStat> {
        self.checkpoints.last()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Summary {
    pub seeds: Vec<u64>,
    pub checks: Vec<Lemma1Check>,
    pub equal: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStatsSummary {
    pub seeds: Vec<u64>,
    pub stats: EpochLengthStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    Regret(RegretAggregate),
    Zerogap(ZeroGapResult),
    Beta { estimates: Vec<BetaEstimate> },
    Lemma1(Lemma1Summary),
    EpochStats(EpochStatsSummary),
}

/// Everything an experiment produces. Contains no timing or worker
/// information, so it is identical for any worker count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub reps: u64,
    pub outcome: Outcome,
}
