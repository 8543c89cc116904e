//! Explore-then-commit over an infinite reservoir with two types.

use rand::Rng;

use super::record::{AlgoParams, EpochTrace, EpochVerdict, RegretTracker, RunRecord};
use crate::error::{Error, Result};
use crate::policy::ArmSlot;
use crate::reward::{Arm, CabInstance, RewardModel, Reservoir};
use crate::stream::Seed;

/// Plays per arm in a full exploration epoch: `ceil(2 ln(n) / delta^2)`.
pub fn exploration_length(n: u64, delta: f64) -> u64 {
    (2.0 * (n as f64).ln() / (delta * delta)).ceil() as u64
}

/// Result of one paired exploration of `m` plays per arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationTest {
    pub sum_first: f64,
    pub sum_second: f64,
    /// `|sum_first - sum_second| < delta m`.
    pub discard: bool,
}

impl ExplorationTest {
    /// Arm with the larger reward sum; ties go to the first.
    pub fn winner(&self) -> ArmSlot {
        if self.sum_second > self.sum_first {
            ArmSlot::Second
        } else {
            ArmSlot::First
        }
    }
}

/// Plays each model `m` times from its own stream and applies the
/// `delta m` separation test.
pub fn exploration_test<R: Rng>(
    first: &RewardModel,
    second: &RewardModel,
    m: u64,
    delta: f64,
    rngs: [&mut R; 2],
) -> ExplorationTest {
    let [r1, r2] = rngs;
    let sum_first: f64 = (0..m).map(|_| first.sample(r1)).sum();
    let sum_second: f64 = (0..m).map(|_| second.sample(r2)).sum();
    ExplorationTest {
        sum_first,
        sum_second,
        discard: (sum_first - sum_second).abs() < delta * m as f64,
    }
}

fn check_delta(n: u64, delta: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("horizon n = {n} must be at least 2")));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta = {delta} must be positive")));
    }
    if delta > 1.0 {
        return Err(Error::Domain(format!("delta = {delta} > 1 makes the separation test always fire")));
    }
    Ok(())
}

/// Runs explore-then-commit for exactly `n` plays.
///
/// Each epoch draws two new arms and plays each `min(L, T / 2)` times
/// (first arm then second). A separation below `delta m` discards the pair;
/// otherwise the remaining budget goes to the arm with the larger sum. With
/// an odd budget the final single play goes to the first arm of the last pair.
pub fn run_etc(instance: &CabInstance, n: u64, delta: f64, seed: Seed) -> Result<RunRecord> {
    check_delta(n, delta)?;
    let exploration = exploration_length(n, delta);
    let mut reservoir = Reservoir::new(instance, seed.stream("reservoir"));
    let mut tracker = RegretTracker::new(instance.gap(), n);
    let mut epochs: Vec<EpochTrace> = Vec::new();
    let mut budget = n;
    let mut committed_arm_type = None;
    let mut last_pair: Option<[Arm; 2]> = None;

    while budget >= 2 {
        let pair = [reservoir.draw_new_arm(), reservoir.draw_new_arm()];
        let m = exploration.min(budget / 2);
        let mut r1 = seed.indexed_stream("arm", pair[0].label);
        let mut r2 = seed.indexed_stream("arm", pair[1].label);
        let test = exploration_test(&pair[0].model, &pair[1].model, m, delta, [&mut r1, &mut r2]);
        tracker.record_many(pair[0].arm_type, m);
        tracker.record_many(pair[1].arm_type, m);
        budget -= 2 * m;
        let mut trace = EpochTrace {
            epoch_index: epochs.len() as u64,
            arm_labels: (pair[0].label, pair[1].label),
            arm_types: (pair[0].arm_type, pair[1].arm_type),
            length: 2 * m,
            verdict: EpochVerdict::DiscardedHomogeneous,
            test_fires_at_m: Some(m),
        };
        last_pair = Some(pair);
        if !test.discard {
            let chosen = pair[test.winner().index()];
            tracker.record_many(chosen.arm_type, budget);
            trace.length += budget;
            trace.verdict = EpochVerdict::Committed;
            trace.test_fires_at_m = None;
            committed_arm_type = Some(chosen.arm_type);
            budget = 0;
        }
        epochs.push(trace);
    }
    if budget == 1 {
        let pair = last_pair.expect("n >= 2 guarantees one epoch");
        tracker.record(pair[0].arm_type);
        epochs.last_mut().expect("one epoch").length += 1;
    }

    let (pseudo_regret, plays_on_type2) = tracker.finish();
    Ok(RunRecord {
        params: AlgoParams::Etc { delta, exploration_length: exploration },
        instance: instance.clone(),
        horizon: n,
        seed,
        pseudo_regret,
        epochs,
        plays_on_type2,
        committed_arm_type,
    })
}
