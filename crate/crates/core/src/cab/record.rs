use serde::{Deserialize, Serialize};

use crate::reward::{ArmType, CabInstance};
use crate::stream::Seed;

/// Horizons up to this length keep a per-play regret trajectory.
pub const FULL_TRAJECTORY_LIMIT: u64 = 100_000;

/// Powers of two up to `n`, plus `n` itself.
pub fn default_checkpoints(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(1u64), |&c| c.checked_mul(2))
        .take_while(|&c| c <= n)
        .collect();
    if out.last() != Some(&n) && n > 0 {
        out.push(n);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpochVerdict {
    DiscardedHomogeneous,
    Committed,
    HorizonReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch_index: u64,
    pub arm_labels: (u64, u64),
    pub arm_types: (ArmType, ArmType),
    /// Plays consumed by the epoch.
    pub length: u64,
    pub verdict: EpochVerdict,
    /// Paired-sample count at which the test discarded the set.
    pub test_fires_at_m: Option<u64>,
}

impl EpochTrace {
    pub fn is_heterogeneous(&self) -> bool {
        self.arm_types.0 != self.arm_types.1
    }
}

/// Cumulative pseudo-regret, either per play or at checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretTrajectory {
    /// Entry `k` is the regret after `k + 1` plays.
    Full(Vec<f64>),
    /// `(play count, regret)` pairs in increasing play count.
    Checkpointed(Vec<(u64, f64)>),
}

impl RegretTrajectory {
    /// Regret after `plays` plays, when recorded.
    pub fn at(&self, plays: u64) -> Option<f64> {
        match self {
            RegretTrajectory::Full(v) => plays.checked_sub(1).and_then(|i| v.get(i as usize)).copied(),
            RegretTrajectory::Checkpointed(v) => v.iter().find(|(c, _)| *c == plays).map(|(_, r)| *r),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            RegretTrajectory::Full(v) => v.clone(),
            RegretTrajectory::Checkpointed(v) => v.iter().map(|(_, r)| *r).collect(),
        }
    }
}

/// Algorithm parameters stored alongside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case")]
pub enum AlgoParams {
    Etc { delta: f64, exploration_length: u64 },
    Alg { policy: String, m0: u64, gamma: f64 },
}

impl AlgoParams {
    pub fn algo_id(&self) -> String {
        match self {
            AlgoParams::Etc { .. } => "etc".to_string(),
            AlgoParams::Alg { policy, .. } => format!("alg:{policy}"),
        }
    }

    /// `delta` for ETC, `m0:gamma` for ALG.
    pub fn tuning_label(&self) -> String {
        match self {
            AlgoParams::Etc { delta, .. } => format!("{delta}"),
            AlgoParams::Alg { m0, gamma, .. } => format!("{m0}:{gamma}"),
        }
    }
}

/// Trace of one replication of a CAB algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub params: AlgoParams,
    pub instance: CabInstance,
    pub horizon: u64,
    pub seed: Seed,
    pub pseudo_regret: RegretTrajectory,
    pub epochs: Vec<EpochTrace>,
    pub plays_on_type2: u64,
    pub committed_arm_type: Option<ArmType>,
}

impl RunRecord {
    pub fn final_regret(&self) -> f64 {
        self.instance.gap() * self.plays_on_type2 as f64
    }

    pub fn total_plays(&self) -> u64 {
        self.epochs.iter().map(|e| e.length).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("run record serializes")
    }
}

/// Accumulates the type-2 play count and the regret trajectory.
///
/// Regret after `k` plays is `gap * type2_plays(k)`, computed by a single
/// multiplication so the regret identity holds bit-exactly.
#[derive(Debug, Clone)]
pub(crate) struct RegretTracker {
    gap: f64,
    plays: u64,
    type2: u64,
    full: Option<Vec<f64>>,
    checkpoints: Vec<u64>,
    next_checkpoint: usize,
    recorded: Vec<(u64, f64)>,
}

impl RegretTracker {
    pub(crate) fn new(gap: f64, horizon: u64) -> Self {
        let full = (horizon <= FULL_TRAJECTORY_LIMIT).then(|| Vec::with_capacity(horizon as usize));
        RegretTracker {
            gap,
            plays: 0,
            type2: 0,
            full,
            checkpoints: default_checkpoints(horizon),
            next_checkpoint: 0,
            recorded: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, arm_type: ArmType) {
        self.record_many(arm_type, 1);
    }

    pub(crate) fn record_many(&mut self, arm_type: ArmType, count: u64) {
        let inferior = arm_type == ArmType::Type2;
        if let Some(full) = self.full.as_mut() {
            for k in 1..=count {
                let t2 = if inferior { self.type2 + k } else { self.type2 };
                full.push(self.gap * t2 as f64);
            }
        }
        let end = self.plays + count;
        while let Some(&c) = self.checkpoints.get(self.next_checkpoint) {
            if c > end {
                break;
            }
            let t2 = if inferior { self.type2 + (c - self.plays) } else { self.type2 };
            self.recorded.push((c, self.gap * t2 as f64));
            self.next_checkpoint += 1;
        }
        self.plays = end;
        if inferior {
            self.type2 += count;
        }
    }

    pub(crate) fn plays(&self) -> u64 {
        self.plays
    }

    pub(crate) fn finish(self) -> (RegretTrajectory, u64) {
        let traj = match self.full {
            Some(full) => RegretTrajectory::Full(full),
            None => RegretTrajectory::Checkpointed(self.recorded),
        };
        (traj, self.type2)
    }
}
