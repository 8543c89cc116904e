//! Two-armed experiments with equal means: the distribution of the share of
//! plays going to the first arm, and the concentration bounds it is checked
//! against.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cab::bounds::generic_ucb_tail_bound;
use crate::error::{Error, Result};
use crate::policy::{ArmSlot, Policy, PolicyState};
use crate::reward::RewardModel;
use crate::stream::{Seed, SimRng};

pub const DEFAULT_BINS: usize = 100;
pub const DEFAULT_EPSILONS: [f64; 3] = [0.40, 0.45, 0.48];

/// `1/2 - sqrt(3)/4`: asymptotic lower envelope of `min(x, 1 - x)` under UCB1.
pub fn balance_floor() -> f64 {
    0.5 - 3f64.sqrt() / 4.0
}

/// Reward source for a zero-gap arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZeroGapReward {
    Model { model: RewardModel },
    /// Unbounded `N(mu, sigma^2)`; only for rules that accept unbounded rewards.
    Gaussian { mu: f64, sigma: f64 },
    /// Always pays `value` in `[0, 1]`.
    Constant { value: f64 },
}

impl ZeroGapReward {
    pub fn model(model: RewardModel) -> Self {
        ZeroGapReward::Model { model }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ZeroGapReward::Model { model } => model.mean(),
            ZeroGapReward::Gaussian { mu, .. } => mu,
            ZeroGapReward::Constant { value } => value,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, ZeroGapReward::Gaussian { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ZeroGapReward::Model { model } => model.sample(rng),
            ZeroGapReward::Gaussian { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + sigma * z
            }
            ZeroGapReward::Constant { value } => value,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ZeroGapReward::Model { model } => serde_json::to_string(&model.kind()).expect("serializable"),
            ZeroGapReward::Gaussian { mu, sigma } => format!("gaussian({mu},{sigma})"),
            ZeroGapReward::Constant { value } => format!("constant({value})"),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ZeroGapReward::Model { .. } => Ok(()),
            ZeroGapReward::Gaussian { mu, sigma } if mu.is_finite() && sigma > 0.0 && sigma.is_finite() => Ok(()),
            ZeroGapReward::Constant { value } if (0.0..=1.0).contains(&value) => Ok(()),
            other => Err(Error::InvalidModel(format!("invalid zero-gap reward {other:?}"))),
        }
    }
}

/// Checks that the pair has equal means and suits the rule.
pub fn check_zero_gap(policy: &Policy, r1: &ZeroGapReward, r2: &ZeroGapReward) -> Result<()> {
    r1.validate()?;
    r2.validate()?;
    if r1.mean() != r2.mean() {
        return Err(Error::InvalidInstance(format!(
            "zero-gap experiment needs equal means, got {} and {}",
            r1.mean(),
            r2.mean()
        )));
    }
    if policy.bounded_rewards() && !(r1.is_bounded() && r2.is_bounded()) {
        return Err(Error::Config(format!(
            "policy {policy} needs rewards in [0, 1]; unbounded rewards are for ts-gauss only"
        )));
    }
    Ok(())
}

/// Plays of the first arm in one run of `n` plays.
pub fn first_arm_plays(policy: &Policy, r1: &ZeroGapReward, r2: &ZeroGapReward, n: u64, rep_seed: Seed) -> Result<u64> {
    let rewards = [*r1, *r2];
    let mut arm_rngs: [SimRng; 2] = [rep_seed.stream("zerogap/arm/0"), rep_seed.stream("zerogap/arm/1")];
    let mut rngs: [SimRng; 2] = [rep_seed.stream("zerogap/posterior/0"), rep_seed.stream("zerogap/posterior/1")];
    let mut state = PolicyState::new();
    for t in 1..=n {
        let arm = policy.select_arm(&state, t, &mut rngs);
        let i = arm.index();
        let reward = rewards[i].sample(&mut arm_rngs[i]);
        policy.update(&mut state, arm, reward, &mut rngs[i])?;
    }
    Ok(state.plays(ArmSlot::First))
}

/// Equal-width histogram on `[0, 1]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(bins: usize) -> Self {
        let bins = bins.max(1);
        Histogram {
            edges: (0..=bins).map(|k| k as f64 / bins as f64).collect(),
            counts: vec![0; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, x: f64) {
        let bins = self.bins();
        let k = ((x * bins as f64).floor() as usize).min(bins - 1);
        self.counts[k] += 1;
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.bins(), other.bins(), "histograms must share binning");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Count of samples in `[lo, hi)`, summed over whole bins.
    pub fn mass_between(&self, lo: f64, hi: f64) -> u64 {
        self.edges
            .windows(2)
            .zip(&self.counts)
            .filter(|(w, _)| w[0] >= lo - 1e-12 && w[1] <= hi + 1e-12)
            .map(|(_, c)| *c)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
    /// `min over samples of min(x, 1 - x)`.
    pub min_balance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub epsilon: f64,
    pub empirical: f64,
    pub std_error: f64,
    /// Concentration bound, for UCB-family rules only.
    pub bound: Option<f64>,
    pub vacuous: Option<bool>,
}

impl TailRow {
    /// Empirical frequency within `slack` standard errors of the bound.
    pub fn within_bound(&self, slack: f64) -> Option<bool> {
        self.bound.map(|b| self.empirical <= b + slack * self.std_error)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroGapResult {
    pub policy: String,
    pub reward1: ZeroGapReward,
    pub reward2: ZeroGapReward,
    pub n: u64,
    pub reps: u64,
    pub master_seed: u64,
    pub first_arm_plays: Vec<u64>,
    pub samples: Vec<f64>,
    pub histogram: Histogram,
    pub summary: Summary,
    pub tails: Vec<TailRow>,
    pub warnings: Vec<String>,
}

impl ZeroGapResult {
    /// Assembles the result from per-replication counts, in rep order.
    #[allow(clippy::too_many_arguments)]
    pub fn from_counts(
        policy: &Policy,
        r1: ZeroGapReward,
        r2: ZeroGapReward,
        n: u64,
        master_seed: u64,
        bins: usize,
        epsilons: &[f64],
        first_arm_plays: Vec<u64>,
    ) -> Result<Self> {
        let samples: Vec<f64> = first_arm_plays.iter().map(|&c| c as f64 / n as f64).collect();
        let mut histogram = Histogram::new(bins);
        samples.iter().for_each(|&x| histogram.add(x));
        let reps = samples.len() as u64;
        let (mean, std) = mean_std(&samples);
        let summary = Summary {
            mean,
            std,
            std_error: if reps == 0 { 0.0 } else { std / (reps as f64).sqrt() },
            min: samples.iter().cloned().fold(f64::INFINITY, f64::min),
            max: samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            min_balance: samples.iter().map(|&x| x.min(1.0 - x)).fold(f64::INFINITY, f64::min),
        };
        let tails = epsilons
            .iter()
            .map(|&eps| tail_row(policy, n, &samples, eps))
            .collect::<Result<Vec<_>>>()?;
        let mut warnings = Vec::new();
        if *policy == Policy::UCB1 && n >= 100_000 && reps > 0 && summary.min_balance <= balance_floor() {
            warnings.push(format!(
                "min balance {:.4} at n = {n} is at or below the asymptotic floor {:.4}",
                summary.min_balance,
                balance_floor()
            ));
        }
        Ok(ZeroGapResult {
            policy: policy.id(),
            reward1: r1,
            reward2: r2,
            n,
            reps,
            master_seed,
            first_arm_plays,
            samples,
            histogram,
            summary,
            tails,
            warnings,
        })
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn tail_row(policy: &Policy, n: u64, samples: &[f64], epsilon: f64) -> Result<TailRow> {
    let empirical = tail_fraction(samples, epsilon);
    let reps = samples.len().max(1) as f64;
    let (bound, vacuous) = match *policy {
        Policy::Ucb { rho } if epsilon > 0.0 && epsilon < 0.5 => {
            let tb = generic_ucb_tail_bound::<f64>(n, epsilon, rho)?;
            (Some(tb.value), Some(tb.vacuous))
        }
        _ => (None, None),
    };
    Ok(TailRow { epsilon, empirical, std_error: (empirical * (1.0 - empirical) / reps).sqrt(), bound, vacuous })
}

fn tail_fraction(samples: &[f64], epsilon: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|&&x| (x - 0.5).abs() > epsilon).count() as f64 / samples.len() as f64
}

/// Fraction of samples with `|x - 1/2| > epsilon`.
pub fn tail_frequency(result: &ZeroGapResult, epsilon: f64) -> f64 {
    tail_fraction(&result.samples, epsilon)
}

/// Sequential run of `reps` replications.
#[allow(clippy::too_many_arguments)]
pub fn run_zerogap(
    policy: &Policy,
    r1: ZeroGapReward,
    r2: ZeroGapReward,
    n: u64,
    reps: u64,
    bins: usize,
    seed: u64,
) -> Result<ZeroGapResult> {
    check_zero_gap(policy, &r1, &r2)?;
    if n == 0 {
        return Err(Error::Domain("zero-gap runs need n >= 1".to_string()));
    }
    let counts = (0..reps)
        .map(|rep| first_arm_plays(policy, &r1, &r2, n, Seed::replication(seed, rep)))
        .collect::<Result<Vec<_>>>()?;
    ZeroGapResult::from_counts(policy, r1, r2, n, seed, bins, &DEFAULT_EPSILONS, counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern_half() -> ZeroGapReward {
        ZeroGapReward::model(RewardModel::bernoulli(0.5).unwrap())
    }

    #[test]
    fn unequal_means_rejected() {
        let r2 = ZeroGapReward::model(RewardModel::bernoulli(0.6).unwrap());
        assert!(run_zerogap(&Policy::UCB1, bern_half(), r2, 10, 1, 10, 0).is_err());
    }

    #[test]
    fn gaussian_rewards_only_for_gaussian_ts() {
        let g = ZeroGapReward::Gaussian { mu: 0.5, sigma: 1.0 };
        assert!(run_zerogap(&Policy::UCB1, g, g, 10, 1, 10, 0).is_err());
        assert!(run_zerogap(&Policy::TsBeta, g, g, 10, 1, 10, 0).is_err());
        let ok = run_zerogap(&Policy::TsGauss { sigma: 1.0 }, g, g, 200, 5, 10, 0).unwrap();
        assert!(ok.samples.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn constant_rewards_alternate_under_ucb() {
        let c = ZeroGapReward::Constant { value: 0.7 };
        for n in 1..300u64 {
            let plays = first_arm_plays(&Policy::UCB1, &c, &c, n, Seed(n)).unwrap();
            let x = plays as f64 / n as f64;
            assert!((x - 0.5).abs() <= 2.0 / n as f64, "n = {n}, x = {x}");
        }
    }

    #[test]
    fn label_swap_maps_x_to_one_minus_x() {
        // Continuous rewards: ties have probability zero.
        let u = ZeroGapReward::model(RewardModel::uniform());
        let b = ZeroGapReward::model(RewardModel::beta(2.0, 2.0).unwrap());
        for policy in [Policy::UCB1, Policy::TsBeta, Policy::TsGauss { sigma: 1.0 }] {
            for rep in 0..5u64 {
                let seed = Seed::replication(99, rep);
                let n = 500;
                let straight = first_arm_plays(&policy, &u, &b, n, seed).unwrap();
                let swapped = swapped_first_arm_plays(&policy, &b, &u, n, seed);
                assert_eq!(straight, n - swapped, "{policy} rep {rep}");
            }
        }
    }

    // Same run with the arm and posterior substreams exchanged.
    fn swapped_first_arm_plays(policy: &Policy, r1: &ZeroGapReward, r2: &ZeroGapReward, n: u64, seed: Seed) -> u64 {
        let rewards = [*r1, *r2];
        let mut arm_rngs = [seed.stream("zerogap/arm/1"), seed.stream("zerogap/arm/0")];
        let mut rngs = [seed.stream("zerogap/posterior/1"), seed.stream("zerogap/posterior/0")];
        let mut state = PolicyState::new();
        for t in 1..=n {
            let arm = policy.select_arm(&state, t, &mut rngs);
            let i = arm.index();
            let reward = rewards[i].sample(&mut arm_rngs[i]);
            policy.update(&mut state, arm, reward, &mut rngs[i]).unwrap();
        }
        state.plays(ArmSlot::First)
    }

    #[test]
    fn tail_frequency_edges() {
        let res = run_zerogap(&Policy::TsBeta, bern_half(), bern_half(), 101, 200, 10, 3).unwrap();
        assert_eq!(tail_frequency(&res, 0.5), 0.0);
        // n odd: no sample equals 1/2 exactly.
        assert_eq!(tail_frequency(&res, 0.0), 1.0);
        assert_eq!(res.histogram.total(), 200);
        assert!(res.tails.iter().all(|r| r.bound.is_none()));
    }

    #[test]
    fn ucb_tail_rows_carry_bounds() {
        let res = run_zerogap(&Policy::UCB1, bern_half(), bern_half(), 1000, 50, 100, 3).unwrap();
        assert_eq!(res.tails.len(), 3);
        for row in &res.tails {
            assert!(row.bound.is_some());
            assert_eq!(row.within_bound(2.0), Some(true));
        }
        assert!((res.summary.mean - 0.5).abs() < 0.05);
    }

    #[test]
    fn histogram_edges_and_merge() {
        let mut h = Histogram::new(4);
        for x in [0.0, 0.25, 0.5, 0.99, 1.0] {
            h.add(x);
        }
        assert_eq!(h.counts, vec![1, 1, 1, 2]);
        let mut g = Histogram::new(4);
        g.add(0.1);
        h.merge(&g);
        assert_eq!(h.counts, vec![2, 1, 1, 2]);
        assert_eq!(h.mass_between(0.25, 0.75), 2);
    }

    #[test]
    fn reproducible() {
        let a = run_zerogap(&Policy::TsBeta, bern_half(), bern_half(), 300, 20, 10, 8).unwrap();
        let b = run_zerogap(&Policy::TsBeta, bern_half(), bern_half(), 300, 20, 10, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn floor_value() {
        assert!((balance_floor() - 0.0669872981).abs() < 1e-9);
    }
}
