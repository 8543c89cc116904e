//! Two-armed playing rules: UCB(rho), Thompson Sampling with Beta or
//! Gaussian posteriors, and the empirical-mean (greedy) rule.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Position of an arm inside the current two-arm consideration set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArmSlot {
    First,
    Second,
}

impl ArmSlot {
    pub const BOTH: [ArmSlot; 2] = [ArmSlot::First, ArmSlot::Second];

    pub fn index(self) -> usize {
        match self {
            ArmSlot::First => 0,
            ArmSlot::Second => 1,
        }
    }

    pub fn other(self) -> ArmSlot {
        match self {
            ArmSlot::First => ArmSlot::Second,
            ArmSlot::Second => ArmSlot::First,
        }
    }
}

/// A playing rule, addressed on the command line by its string id.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Policy {
    /// Index `mean + sqrt(rho ln t / N)`; `rho = 2` is UCB1.
    Ucb { rho: f64 },
    /// Beta(1, 1) priors with Bernoulli(-reduced) likelihood.
    TsBeta,
    /// Standard normal prior, Gaussian likelihood with scale `sigma`.
    TsGauss { sigma: f64 },
    /// Play the empirically best arm; each arm once first.
    GreedyCommit,
}

impl Policy {
    pub const UCB1: Policy = Policy::Ucb { rho: 2.0 };

    pub fn id(&self) -> String {
        self.to_string()
    }

    /// Whether the rule requires rewards in `[0, 1]`.
    pub fn bounded_rewards(&self) -> bool {
        !matches!(self, Policy::TsGauss { .. })
    }

    pub fn is_index_policy(&self) -> bool {
        matches!(self, Policy::Ucb { .. } | Policy::GreedyCommit)
    }

    /// Arm to play at decision time `t` (1-based). `rngs` are per-arm
    /// posterior-sampling streams; index policies never touch them.
    pub fn select_arm<R: Rng>(&self, state: &PolicyState, t: u64, rngs: &mut [R; 2]) -> ArmSlot {
        match *self {
            Policy::Ucb { rho } => {
                if let Some(arm) = state.first_unplayed() {
                    return arm;
                }
                // History through t - 1.
                let horizon = t.saturating_sub(1).max(1);
                let first = state.ucb_index_unchecked(ArmSlot::First, horizon, rho);
                let second = state.ucb_index_unchecked(ArmSlot::Second, horizon, rho);
                argmax_first_on_tie(first, second)
            }
            Policy::GreedyCommit => {
                if let Some(arm) = state.first_unplayed() {
                    return arm;
                }
                argmax_first_on_tie(state.sums[0] / state.plays[0] as f64, state.sums[1] / state.plays[1] as f64)
            }
            Policy::TsBeta => {
                let draws = ArmSlot::BOTH.map(|arm| {
                    let (a, b) = state.beta_posterior(arm);
                    Beta::new(a, b).expect("posterior shapes are >= 1").sample(&mut rngs[arm.index()])
                });
                argmax_first_on_tie(draws[0], draws[1])
            }
            Policy::TsGauss { sigma } => {
                let draws = ArmSlot::BOTH.map(|arm| {
                    let (mean, var) = state.gaussian_posterior(arm, sigma);
                    let z: f64 = StandardNormal.sample(&mut rngs[arm.index()]);
                    mean + var.sqrt() * z
                });
                argmax_first_on_tie(draws[0], draws[1])
            }
        }
    }

    /// Records `reward` for `arm`. Bounded-reward rules reject rewards outside
    /// `[0, 1]`. TS-Beta turns a fractional reward into a Bernoulli trial
    /// drawn from `rng`.
    pub fn update<R: Rng>(&self, state: &mut PolicyState, arm: ArmSlot, reward: f64, rng: &mut R) -> Result<()> {
        if !reward.is_finite() || (self.bounded_rewards() && !(0.0..=1.0).contains(&reward)) {
            return Err(Error::RewardOutOfRange(reward));
        }
        let i = arm.index();
        state.plays[i] += 1;
        state.sums[i] += reward;
        if let Policy::TsBeta = self {
            let success = if reward == 1.0 {
                true
            } else if reward == 0.0 {
                false
            } else {
                rng.random::<f64>() < reward
            };
            if success {
                state.successes[i] += 1;
            } else {
                state.failures[i] += 1;
            }
        }
        Ok(())
    }
}

fn argmax_first_on_tie(first: f64, second: f64) -> ArmSlot {
    if second > first {
        ArmSlot::Second
    } else {
        ArmSlot::First
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Ucb { rho } if *rho == 2.0 => write!(f, "ucb1"),
            Policy::Ucb { rho } => write!(f, "ucb-rho:{rho}"),
            Policy::TsBeta => write!(f, "ts-beta"),
            Policy::TsGauss { sigma } => write!(f, "ts-gauss:{sigma}"),
            Policy::GreedyCommit => write!(f, "greedy-commit"),
        }
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(id: &str) -> Result<Self> {
        let unknown = || Error::UnknownPolicy(id.to_string());
        let param = |prefix: &str| -> Option<Result<f64>> {
            id.strip_prefix(prefix).map(|v| v.parse::<f64>().map_err(|_| unknown()))
        };
        match id {
            "ucb1" => return Ok(Policy::UCB1),
            "ts-beta" => return Ok(Policy::TsBeta),
            "ts-gauss" => return Ok(Policy::TsGauss { sigma: 1.0 }),
            "greedy-commit" => return Ok(Policy::GreedyCommit),
            _ => {}
        }
        if let Some(rho) = param("ucb-rho:") {
            let rho = rho?;
            if !(rho > 0.5 && rho.is_finite()) {
                return Err(Error::Domain(format!("ucb exploration coefficient rho = {rho} must exceed 1/2")));
            }
            return Ok(Policy::Ucb { rho });
        }
        if let Some(sigma) = param("ts-gauss:") {
            let sigma = sigma?;
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::Domain(format!("ts-gauss scale sigma = {sigma} must be positive")));
            }
            return Ok(Policy::TsGauss { sigma });
        }
        Err(unknown())
    }
}

impl TryFrom<String> for Policy {
    type Error = Error;

    fn try_from(id: String) -> Result<Self> {
        id.parse()
    }
}

impl From<Policy> for String {
    fn from(p: Policy) -> Self {
        p.to_string()
    }
}

/// Per-arm sufficient statistics of the current consideration set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    pub plays: [u64; 2],
    pub sums: [f64; 2],
    pub successes: [u64; 2],
    pub failures: [u64; 2],
}

impl PolicyState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn plays(&self, arm: ArmSlot) -> u64 {
        self.plays[arm.index()]
    }

    pub fn total_plays(&self) -> u64 {
        self.plays[0] + self.plays[1]
    }

    /// Empirical mean; `None` before the first play.
    pub fn mean(&self, arm: ArmSlot) -> Option<f64> {
        let n = self.plays(arm);
        (n > 0).then(|| self.sums[arm.index()] / n as f64)
    }

    fn first_unplayed(&self) -> Option<ArmSlot> {
        ArmSlot::BOTH.into_iter().find(|&arm| self.plays(arm) == 0)
    }

    /// `mean + sqrt(rho ln t / N)` for the given arm.
    pub fn ucb_index(&self, arm: ArmSlot, t: u64, rho: f64) -> Result<f64> {
        let mean = self
            .mean(arm)
            .ok_or_else(|| Error::Domain("ucb index of an unplayed arm".to_string()))?;
        ucb_index(mean, self.plays(arm), t, rho)
    }

    fn ucb_index_unchecked(&self, arm: ArmSlot, t: u64, rho: f64) -> f64 {
        let n = self.plays(arm);
        self.sums[arm.index()] / n as f64 + (rho * (t as f64).ln() / n as f64).sqrt()
    }

    /// `(a, b)` with `a = 1 + successes`, `b = 1 + failures`.
    pub fn beta_posterior(&self, arm: ArmSlot) -> (f64, f64) {
        let i = arm.index();
        (1.0 + self.successes[i] as f64, 1.0 + self.failures[i] as f64)
    }

    /// Posterior `(mean, variance)` under a standard normal prior and
    /// likelihood scale `sigma`: `(S / (N + 1), sigma^2 / (N + 1))`.
    pub fn gaussian_posterior(&self, arm: ArmSlot, sigma: f64) -> (f64, f64) {
        let i = arm.index();
        let k = self.plays[i] as f64 + 1.0;
        (self.sums[i] / k, sigma * sigma / k)
    }
}

/// `mean + sqrt(rho ln t / plays)`. Requires `plays >= 1` and `t >= 2`.
pub fn ucb_index<T: Real>(mean: T, plays: u64, t: u64, rho: T) -> Result<T> {
    if plays == 0 {
        return Err(Error::Domain("ucb index needs at least one play".to_string()));
    }
    if t < 2 {
        return Err(Error::Domain(format!("ucb index needs t >= 2, got {t}")));
    }
    Ok(mean + (rho * T::count(t).ln() / T::count(plays)).sqrt())
}
