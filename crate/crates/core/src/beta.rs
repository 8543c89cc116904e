//! Monte-Carlo estimation of the survival constant: the probability that the
//! paired-difference walk of two i.i.d. reward sequences stays at or above
//! the threshold schedule for every `m`, truncated at a finite `M`.
//!
//! Truncation can only overestimate the infinite-horizon probability; every
//! estimate carries its `M` so convergence can be judged from the curve.

use serde::{Deserialize, Serialize};

use crate::cab::alg::{run_epoch, EpochEnd, LiveArm};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::reward::RewardModel;
use crate::schedule::{ThetaSchedule, ThetaTable};
use crate::stream::{Seed, SimRng};

/// Default truncation of the infinite intersection.
pub const DEFAULT_TRUNCATION: u64 = 100_000;

/// Survival checkpoints `1, 2, 4, ..., M` (with `M` appended).
pub fn survival_checkpoints(truncation: u64) -> Vec<u64> {
    crate::cab::default_checkpoints(truncation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub delta: f64,
    pub m0: u64,
    pub gamma: f64,
    pub truncation: u64,
    pub reps: u64,
    pub estimate: f64,
    pub std_error: f64,
    /// `(m, fraction of paths surviving through m)`.
    pub survival_curve: Vec<(u64, f64)>,
    /// Truncated estimates are biased upward.
    pub bias: String,
}

impl BetaEstimate {
    /// Builds the estimate from per-path survival lengths (`M` = survived).
    pub fn from_survival_lengths(
        delta: f64,
        schedule: &ThetaSchedule<f64>,
        truncation: u64,
        lengths: &[u64],
    ) -> BetaEstimate {
        let reps = lengths.len() as u64;
        let survival_curve: Vec<(u64, f64)> = survival_checkpoints(truncation)
            .into_iter()
            .map(|c| {
                let alive = lengths.iter().filter(|&&len| len >= c).count();
                (c, if reps == 0 { 0.0 } else { alive as f64 / reps as f64 })
            })
            .collect();
        let estimate = survival_curve.last().map_or(0.0, |&(_, p)| p);
        let std_error = if reps == 0 { 0.0 } else { (estimate * (1.0 - estimate) / reps as f64).sqrt() };
        BetaEstimate {
            delta,
            m0: schedule.m0(),
            gamma: schedule.gamma(),
            truncation,
            reps,
            estimate,
            std_error,
            survival_curve,
            bias: "upward (finite truncation)".to_string(),
        }
    }

    /// Survival probability at checkpoint `m`.
    pub fn survival_at(&self, m: u64) -> Option<f64> {
        self.survival_curve.iter().find(|(c, _)| *c == m).map(|(_, p)| *p)
    }
}

/// Number of steps the paired walk of one replication survives, capped at
/// `table.len()`. Exits at the first violation.
pub fn survival_length(model1: &RewardModel, model2: &RewardModel, table: &ThetaTable<f64>, rep_seed: Seed) -> u64 {
    let mut r1 = rep_seed.stream("beta/y1");
    let mut r2 = rep_seed.stream("beta/y2");
    survival_length_with(|| model1.sample(&mut r1) - model2.sample(&mut r2), table)
}

/// [`survival_length`] over an arbitrary source of paired differences.
pub fn survival_length_with(mut next_diff: impl FnMut() -> f64, table: &ThetaTable<f64>) -> u64 {
    let mut sum = 0.0f64;
    for m in 1..=table.len() {
        sum += next_diff();
        if sum.abs() < table.get(m) {
            return m - 1;
        }
    }
    table.len()
}

fn check_pair(model1: &RewardModel, model2: &RewardModel, diagnostic: bool) -> Result<f64> {
    let delta = (model1.mean() - model2.mean()).abs();
    if delta == 0.0 && !diagnostic {
        return Err(Error::Domain(
            "survival constant needs distinct means; use diagnostic mode for a zero gap".to_string(),
        ));
    }
    Ok(delta)
}

fn estimate_inner(
    model1: &RewardModel,
    model2: &RewardModel,
    schedule: &ThetaSchedule<f64>,
    truncation: u64,
    reps: u64,
    seed: u64,
    diagnostic: bool,
) -> Result<BetaEstimate> {
    let delta = check_pair(model1, model2, diagnostic)?;
    if truncation == 0 {
        return Err(Error::Domain("truncation M must be positive".to_string()));
    }
    let table = schedule.table(truncation);
    let lengths: Vec<u64> = (0..reps)
        .map(|rep| survival_length(model1, model2, &table, Seed::replication(seed, rep)))
        .collect();
    Ok(BetaEstimate::from_survival_lengths(delta, schedule, truncation, &lengths))
}

/// Sequential estimate for one pair of distributions with distinct means.
pub fn estimate_beta(
    model1: &RewardModel,
    model2: &RewardModel,
    schedule: &ThetaSchedule<f64>,
    truncation: u64,
    reps: u64,
    seed: u64,
) -> Result<BetaEstimate> {
    estimate_inner(model1, model2, schedule, truncation, reps, seed, false)
}

/// As [`estimate_beta`] but also accepts equal means; the estimate then
/// tracks the decay of the survival curve.
pub fn estimate_beta_diagnostic(
    model1: &RewardModel,
    model2: &RewardModel,
    schedule: &ThetaSchedule<f64>,
    truncation: u64,
    reps: u64,
    seed: u64,
) -> Result<BetaEstimate> {
    estimate_inner(model1, model2, schedule, truncation, reps, seed, true)
}

/// Minimum of the estimates over every pair drawn from the two families.
pub fn estimate_beta_families(
    family1: &[RewardModel],
    family2: &[RewardModel],
    schedule: &ThetaSchedule<f64>,
    truncation: u64,
    reps: u64,
    seed: u64,
) -> Result<BetaEstimate> {
    let mut best: Option<BetaEstimate> = None;
    for f1 in family1 {
        for f2 in family2 {
            let est = estimate_beta(f1, f2, schedule, truncation, reps, seed)?;
            if best.as_ref().is_none_or(|b| est.estimate < b.estimate) {
                best = Some(est);
            }
        }
    }
    best.ok_or_else(|| Error::Domain("empty family".to_string()))
}

/// Survival curve of [`estimate_beta`]; its last point is the estimate.
pub fn survival_curve(
    model1: &RewardModel,
    model2: &RewardModel,
    schedule: &ThetaSchedule<f64>,
    truncation: u64,
    reps: u64,
    seed: u64,
) -> Result<Vec<(u64, f64)>> {
    estimate_inner(model1, model2, schedule, truncation, reps, seed, true).map(|e| e.survival_curve)
}

/// Symmetric Bernoulli pair with gap `delta`: means `(1 + delta)/2` and `(1 - delta)/2`.
pub fn symmetric_bernoulli_pair(delta: f64) -> Result<(RewardModel, RewardModel)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("gap {delta} must lie in (0, 1)")));
    }
    Ok((RewardModel::bernoulli((1.0 + delta) / 2.0)?, RewardModel::bernoulli((1.0 - delta) / 2.0)?))
}

/// Empirical distribution of single-epoch termination times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLengthStats {
    pub policy: String,
    pub horizon: u64,
    pub reps: u64,
    /// Mean termination time with censored epochs counted at the horizon.
    pub mean_tau: f64,
    pub std_error: f64,
    pub mean_tau_uncensored: Option<f64>,
    pub censored_fraction: f64,
    /// `(q, value)` for q in {0.5, 0.9, 0.99, 1.0}.
    pub quantiles: Vec<(f64, u64)>,
    pub ends: Vec<EpochEnd>,
}

impl EpochLengthStats {
    pub fn from_ends(policy: &Policy, horizon: u64, ends: Vec<EpochEnd>) -> Self {
        let reps = ends.len() as u64;
        let mut taus: Vec<u64> = ends.iter().map(|e| e.plays()).collect();
        taus.sort_unstable();
        let censored = ends.iter().filter(|e| e.is_censored()).count();
        let (mean_tau, std_error) = crate::engine::aggregate::mean_and_se(taus.iter().map(|&t| t as f64));
        let uncensored: Vec<f64> = ends.iter().filter(|e| !e.is_censored()).map(|e| e.plays() as f64).collect();
        let mean_tau_uncensored =
            (!uncensored.is_empty()).then(|| uncensored.iter().sum::<f64>() / uncensored.len() as f64);
        let quantiles = if taus.is_empty() {
            Vec::new()
        } else {
            [0.5, 0.9, 0.99, 1.0]
                .into_iter()
                .map(|q| {
                    let rank = ((q * reps as f64).ceil() as usize).clamp(1, taus.len());
                    (q, taus[rank - 1])
                })
                .collect()
        };
        EpochLengthStats {
            policy: policy.id(),
            horizon,
            reps,
            mean_tau,
            std_error,
            mean_tau_uncensored,
            censored_fraction: if reps == 0 { 0.0 } else { censored as f64 / reps as f64 },
            quantiles,
            ends,
        }
    }
}

/// One epoch of the adaptive algorithm on a forced pair, run to termination
/// or to `horizon` plays.
pub fn single_epoch(
    model1: &RewardModel,
    model2: &RewardModel,
    schedule: &ThetaSchedule<f64>,
    policy: &Policy,
    horizon: u64,
    rep_seed: Seed,
) -> Result<EpochEnd> {
    let mut a = LiveArm { model: *model1, rng: rep_seed.stream("epoch/arm/0") };
    let mut b = LiveArm { model: *model2, rng: rep_seed.stream("epoch/arm/1") };
    let mut rngs: [SimRng; 2] = [rep_seed.stream("epoch/posterior/0"), rep_seed.stream("epoch/posterior/1")];
    run_epoch([&mut a, &mut b], policy, schedule, horizon, &mut rngs, |_| {})
}

/// Sequential termination-time statistics over `reps` forced pairs.
pub fn epoch_length_stats(
    model1: &RewardModel,
    model2: &RewardModel,
    schedule: &ThetaSchedule<f64>,
    policy: &Policy,
    horizon: u64,
    reps: u64,
    seed: u64,
) -> Result<EpochLengthStats> {
    let ends = (0..reps)
        .map(|rep| single_epoch(model1, model2, schedule, policy, horizon, Seed::replication(seed, rep)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EpochLengthStats::from_ends(policy, horizon, ends))
}
