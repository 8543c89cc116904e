//! The adaptive epoch algorithm: a playing rule runs on a pair of fresh arms
//! until the paired-difference test declares the pair homogeneous.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::paired::{test_sum, TestOutcome};
use super::record::{AlgoParams, EpochTrace, EpochVerdict, RegretTracker, RunRecord};
use crate::error::{Error, Result};
use crate::policy::{ArmSlot, Policy, PolicyState};
use crate::reward::{CabInstance, RewardModel, Reservoir};
use crate::schedule::ThetaSchedule;
use crate::stream::{Seed, SimRng};

/// Source of an arm's rewards in play order.
pub trait RewardStream {
    fn next_reward(&mut self) -> f64;
}

/// Rewards drawn on demand from a model.
#[derive(Debug, Clone)]
pub struct LiveArm<R> {
    pub model: RewardModel,
    pub rng: R,
}

impl<R: Rng> RewardStream for LiveArm<R> {
    fn next_reward(&mut self) -> f64 {
        self.model.sample(&mut self.rng)
    }
}

/// Rewards replayed from a pre-generated sequence.
#[derive(Debug, Clone)]
pub struct RecordedStream<'a> {
    values: &'a [f64],
    pos: usize,
}

impl<'a> RecordedStream<'a> {
    pub fn new(values: &'a [f64]) -> Self {
        RecordedStream { values, pos: 0 }
    }
}

impl RewardStream for RecordedStream<'_> {
    fn next_reward(&mut self) -> f64 {
        let v = self.values[self.pos];
        self.pos += 1;
        v
    }
}

/// How a single epoch ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochEnd {
    /// Test fired with `m` paired samples after `plays` plays.
    Fired { m: u64, plays: u64 },
    /// Budget exhausted after `plays` plays; the test had examined `m`
    /// paired samples without firing.
    Censored { m: u64, plays: u64 },
}

impl EpochEnd {
    pub fn plays(&self) -> u64 {
        match *self {
            EpochEnd::Fired { plays, .. } | EpochEnd::Censored { plays, .. } => plays,
        }
    }

    pub fn m(&self) -> u64 {
        match *self {
            EpochEnd::Fired { m, .. } | EpochEnd::Censored { m, .. } => m,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, EpochEnd::Censored { .. })
    }
}

/// Runs one epoch for at most `budget` plays.
///
/// Both arms are played once; before every later play the test is evaluated
/// for each new value of the paired-sample count `m = min(N_1, N_2)`, since
/// between increments its outcome cannot change. `on_play` sees every play
/// in order.
pub fn run_epoch<S: RewardStream, R: Rng>(
    streams: [&mut S; 2],
    policy: &Policy,
    schedule: &ThetaSchedule<f64>,
    budget: u64,
    policy_rngs: &mut [R; 2],
    mut on_play: impl FnMut(ArmSlot),
) -> Result<EpochEnd> {
    let mut streams = streams;
    let mut state = PolicyState::new();
    let mut history: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut plays = 0u64;
    let mut play = |arm: ArmSlot, state: &mut PolicyState, history: &mut [Vec<f64>; 2], rngs: &mut [R; 2]| -> Result<()> {
        let i = arm.index();
        let reward = streams[i].next_reward();
        policy.update(state, arm, reward, &mut rngs[i])?;
        history[i].push(reward);
        on_play(arm);
        Ok(())
    };

    for arm in ArmSlot::BOTH {
        if plays == budget {
            return Ok(EpochEnd::Censored { m: 0, plays });
        }
        play(arm, &mut state, &mut history, policy_rngs)?;
        plays += 1;
    }

    let mut tested_m = 0u64;
    let mut sum = 0.0f64;
    loop {
        // The test runs before each play from the third on.
        if plays == budget {
            return Ok(EpochEnd::Censored { m: tested_m, plays });
        }
        let m = state.plays[0].min(state.plays[1]);
        while tested_m < m {
            let j = tested_m as usize;
            sum += history[0][j] - history[1][j];
            tested_m += 1;
            if test_sum(sum, schedule.theta(tested_m)) == TestOutcome::Fire {
                return Ok(EpochEnd::Fired { m: tested_m, plays });
            }
        }
        let arm = policy.select_arm(&state, plays + 1, policy_rngs);
        play(arm, &mut state, &mut history, policy_rngs)?;
        plays += 1;
    }
}

/// Runs the adaptive epoch algorithm for exactly `n` plays.
pub fn run_alg(
    instance: &CabInstance,
    n: u64,
    policy: &Policy,
    schedule: &ThetaSchedule<f64>,
    seed: Seed,
) -> Result<RunRecord> {
    if n < 2 {
        return Err(Error::Domain(format!("horizon n = {n} must be at least 2")));
    }
    let mut reservoir = Reservoir::new(instance, seed.stream("reservoir"));
    let mut tracker = RegretTracker::new(instance.gap(), n);
    let mut epochs = Vec::new();

    while tracker.plays() < n {
        let pair = [reservoir.draw_new_arm(), reservoir.draw_new_arm()];
        let mut arms = pair.map(|arm| LiveArm { model: arm.model, rng: seed.indexed_stream("arm", arm.label) });
        let mut policy_rngs: [SimRng; 2] = pair.map(|arm| seed.indexed_stream("posterior", arm.label));
        let types = [pair[0].arm_type, pair[1].arm_type];
        let budget = n - tracker.plays();
        let [a1, a2] = &mut arms;
        let end = run_epoch([a1, a2], policy, schedule, budget, &mut policy_rngs, |slot| {
            tracker.record(types[slot.index()])
        })?;
        let (verdict, fired) = match end {
            EpochEnd::Fired { m, .. } => (EpochVerdict::DiscardedHomogeneous, Some(m)),
            EpochEnd::Censored { .. } => (EpochVerdict::HorizonReached, None),
        };
        epochs.push(EpochTrace {
            epoch_index: epochs.len() as u64,
            arm_labels: (pair[0].label, pair[1].label),
            arm_types: (types[0], types[1]),
            length: end.plays(),
            verdict,
            test_fires_at_m: fired,
        });
    }

    let (pseudo_regret, plays_on_type2) = tracker.finish();
    Ok(RunRecord {
        params: AlgoParams::Alg { policy: policy.id(), m0: schedule.m0(), gamma: schedule.gamma() },
        instance: instance.clone(),
        horizon: n,
        seed,
        pseudo_regret,
        epochs,
        plays_on_type2,
        committed_arm_type: None,
    })
}

/// Adaptive stopping point versus the i.i.d. paired stopping time on the
/// same per-arm reward streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma1Check {
    pub adaptive: EpochEnd,
    /// First `m` with `|sum_{j <= m} (x_j - y_j)| < theta_m` over the
    /// available paired samples, if any.
    pub tau_prime: Option<u64>,
    pub equal: bool,
}

/// First `m` at which the paired walk falls below the threshold.
fn first_crossing(first: &[f64], second: &[f64], schedule: &ThetaSchedule<f64>) -> Option<u64> {
    let mut sum = 0.0;
    for (j, (x, y)) in first.iter().zip(second).enumerate() {
        sum += x - y;
        let m = j as u64 + 1;
        if sum.abs() < schedule.theta(m) {
            return Some(m);
        }
    }
    None
}

/// Compares the epoch's stopping sample count under `policy` with the
/// first crossing of the non-adaptive paired walk. Censoring matches when the
/// walk does not cross within the sample count reached at the horizon.
pub fn check_lemma1_streams(
    first: &[f64],
    second: &[f64],
    horizon: u64,
    schedule: &ThetaSchedule<f64>,
    policy: &Policy,
    policy_seed: Seed,
) -> Result<Lemma1Check> {
    if (first.len() as u64) < horizon || (second.len() as u64) < horizon {
        return Err(Error::Domain("reward streams shorter than the horizon".to_string()));
    }
    let mut s1 = RecordedStream::new(first);
    let mut s2 = RecordedStream::new(second);
    let mut rngs = [policy_seed.stream("posterior/0"), policy_seed.stream("posterior/1")];
    let adaptive = run_epoch([&mut s1, &mut s2], policy, schedule, horizon, &mut rngs, |_| {})?;
    let tau_prime = first_crossing(first, second, schedule);
    let equal = match adaptive {
        EpochEnd::Fired { m, .. } => tau_prime == Some(m),
        EpochEnd::Censored { m, .. } => tau_prime.is_none_or(|t| t > m),
    };
    Ok(Lemma1Check { adaptive, tau_prime, equal })
}

/// Lemma-1 check on fresh i.i.d. streams of `model1` and `model2` under UCB1.
pub fn check_lemma1_equality(
    model1: &RewardModel,
    model2: &RewardModel,
    horizon: u64,
    schedule: &ThetaSchedule<f64>,
    seed: Seed,
) -> Result<Lemma1Check> {
    let mut r1 = seed.stream("lemma1/arm/0");
    let mut r2 = seed.stream("lemma1/arm/1");
    let first: Vec<f64> = (0..horizon).map(|_| model1.sample(&mut r1)).collect();
    let second: Vec<f64> = (0..horizon).map(|_| model2.sample(&mut r2)).collect();
    check_lemma1_streams(&first, &second, horizon, schedule, &Policy::UCB1, seed)
}
