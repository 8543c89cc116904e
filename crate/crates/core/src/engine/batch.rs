use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{
    mean_and_se, AggregateResult, BoundOverlay, CheckpointStat, EpochStatsSummary, Lemma1Summary, Outcome,
    RegretAggregate, ReplicationSink, RunSummary,
};
use super::config::{Experiment, ExperimentConfig};
use crate::beta::{single_epoch, survival_length, BetaEstimate, EpochLengthStats};
use crate::cab::bounds::{alg_regret_bound, etc_regret_bound, lower_bound_curve, LOWER_BOUND_PRESET_C};
use crate::cab::{check_lemma1_equality, run_alg, run_etc, RunRecord};
use crate::error::{Error, Result};
use crate::reward::CabInstance;
use crate::stream::Seed;
use crate::zerogap::{first_arm_plays, ZeroGapResult};

/// Execution metadata kept apart from the result so exports do not depend
/// on the machine or the worker count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub wall_time_secs: f64,
    pub workers: usize,
}

/// Runs every replication of `config` on up to `workers` threads.
pub fn run_batch(config: &ExperimentConfig, workers: usize) -> Result<AggregateResult> {
    run_batch_timed(config, workers).map(|(r, _)| r)
}

pub fn run_batch_timed(config: &ExperimentConfig, workers: usize) -> Result<(AggregateResult, RunStats)> {
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".to_string()));
    }
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let outcome = pool.install(|| execute(config))?;
    let stats = RunStats { wall_time_secs: start.elapsed().as_secs_f64(), workers };
    let result =
        AggregateResult { config_hash: config.hash(), config: config.without_output(), reps: config.reps, outcome };
    Ok((result, stats))
}

/// Maps `f` over replications in parallel, returning results in rep order.
fn replicate<T: Send>(reps: u64, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let sink = (0..reps)
        .into_par_iter()
        .try_fold(ReplicationSink::new, |mut sink, rep| {
            sink.push(rep, f(rep)?);
            Ok::<_, Error>(sink)
        })
        .try_reduce(ReplicationSink::new, |a, b| Ok(a.merge(b)))?;
    Ok(sink.into_ordered())
}

fn execute(config: &ExperimentConfig) -> Result<Outcome> {
    let n = config.n;
    let seed = config.master_seed;
    let rep_seed = |rep| Seed::replication(seed, rep);
    match &config.experiment {
        Experiment::EtcRegret { instance, delta } => {
            let cps = config.resolved_checkpoints()?;
            let runs = replicate(config.reps, |rep| {
                run_etc(instance, n, *delta, rep_seed(rep)).map(|r| summarize(rep, &r, &cps))
            })?;
            let overlays = cps
                .iter()
                .map(|&c| BoundOverlay {
                    checkpoint: c,
                    upper: (c >= 2)
                        .then(|| etc_regret_bound::<f64>(c, *delta, instance.gap(), instance.alpha()).ok())
                        .flatten()
                        .map(|b| b.value),
                    lower: lower_bound_curve::<f64>(c, instance.gap(), LOWER_BOUND_PRESET_C).unwrap_or(0.0),
                })
                .collect();
            Ok(Outcome::Regret(regret_aggregate("etc".to_string(), format!("{delta}"), &cps, overlays, runs)))
        }
        Experiment::AlgRegret { instance, policy, schedule, reference_beta, reference_c2 } => {
            let cps = config.resolved_checkpoints()?;
            let runs = replicate(config.reps, |rep| {
                run_alg(instance, n, policy, schedule, rep_seed(rep)).map(|r| summarize(rep, &r, &cps))
            })?;
            let overlays = cps
                .iter()
                .map(|&c| BoundOverlay {
                    checkpoint: c,
                    upper: alg_overlay(instance, c, *reference_beta, *reference_c2),
                    lower: lower_bound_curve::<f64>(c, instance.gap(), LOWER_BOUND_PRESET_C).unwrap_or(0.0),
                })
                .collect();
            Ok(Outcome::Regret(regret_aggregate(
                format!("alg:{policy}"),
                format!("{}:{}", schedule.m0(), schedule.gamma()),
                &cps,
                overlays,
                runs,
            )))
        }
        Experiment::Zerogap { policy, reward1, reward2, bins, epsilons } => {
            let counts = replicate(config.reps, |rep| first_arm_plays(policy, reward1, reward2, n, rep_seed(rep)))?;
            Ok(Outcome::Zerogap(ZeroGapResult::from_counts(
                policy, *reward1, *reward2, n, seed, *bins, epsilons, counts,
            )?))
        }
        Experiment::Beta { pairs, schedule, .. } => {
            let table = schedule.table(n);
            let estimates = pairs
                .iter()
                .map(|pair| {
                    let lengths = replicate(config.reps, |rep| {
                        Ok(survival_length(&pair.model1, &pair.model2, &table, rep_seed(rep)))
                    })?;
                    Ok(BetaEstimate::from_survival_lengths(pair.gap(), schedule, n, &lengths))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome::Beta { estimates })
        }
        Experiment::Lemma1 { model1, model2, schedule } => {
            let checks =
                replicate(config.reps, |rep| check_lemma1_equality(model1, model2, n, schedule, rep_seed(rep)))?;
            let equal = checks.iter().filter(|c| c.equal).count() as u64;
            Ok(Outcome::Lemma1(Lemma1Summary { seeds: seeds(seed, config.reps), checks, equal }))
        }
        Experiment::EpochStats { model1, model2, schedule, policy } => {
            let ends =
                replicate(config.reps, |rep| single_epoch(model1, model2, schedule, policy, n, rep_seed(rep)))?;
            Ok(Outcome::EpochStats(EpochStatsSummary {
                seeds: seeds(seed, config.reps),
                stats: EpochLengthStats::from_ends(policy, n, ends),
            }))
        }
    }
}

fn seeds(master: u64, reps: u64) -> Vec<u64> {
    (0..reps).map(|rep| Seed::replication(master, rep).0).collect()
}

fn alg_overlay(instance: &CabInstance, c: u64, beta: Option<f64>, c2: Option<f64>) -> Option<f64> {
    let (beta, c2) = (beta?, c2?);
    alg_regret_bound::<f64>(c, instance.gap(), instance.alpha(), beta, c2).ok()
}

fn summarize(rep: u64, record: &RunRecord, cps: &[u64]) -> RunSummary {
    RunSummary {
        rep,
        seed: record.seed.0,
        regret: cps
            .iter()
            .map(|&c| record.pseudo_regret.at(c).expect("checkpoint recorded by the tracker"))
            .collect(),
        epochs: record.epochs.len() as u64,
        plays_on_type2: record.plays_on_type2,
    }
}

fn regret_aggregate(
    algo: String,
    tuning: String,
    cps: &[u64],
    overlays: Vec<BoundOverlay>,
    runs: Vec<RunSummary>,
) -> RegretAggregate {
    let checkpoints = cps
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let (mean, std_error) = mean_and_se(runs.iter().map(|r| r.regret[k]));
            CheckpointStat { checkpoint: c, mean, std_error }
        })
        .collect();
    RegretAggregate { algo, tuning, checkpoints, overlays, runs }
}
