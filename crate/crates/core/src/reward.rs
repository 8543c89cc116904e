//! Reward distributions on `[0, 1]`, arm types and the lazy arm reservoir.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

const MEAN_TOLERANCE: f64 = 1e-12;

/// Parameterization of a reward distribution. Serialized with a `kind` tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardKind {
    Bernoulli { p: f64 },
    Beta { a: f64, b: f64 },
    Uniform01,
    /// Gaussian `N(mu, sigma^2)` conditioned on `[0, 1]`.
    TruncGauss { mu: f64, sigma: f64 },
}

/// A reward distribution on `[0, 1]` with its analytic mean cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RewardKind", into = "RewardKind")]
pub struct RewardModel {
    kind: RewardKind,
    mean: f64,
}

impl TryFrom<RewardKind> for RewardModel {
    type Error = Error;

    fn try_from(kind: RewardKind) -> Result<Self> {
        RewardModel::new(kind)
    }
}

impl From<RewardModel> for RewardKind {
    fn from(model: RewardModel) -> Self {
        model.kind
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl RewardModel {
    pub fn new(kind: RewardKind) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidModel(msg));
        let mean = match kind {
            RewardKind::Bernoulli { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return invalid(format!("bernoulli p = {p} must lie in (0, 1)"));
                }
                p
            }
            RewardKind::Beta { a, b } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                    return invalid(format!("beta({a}, {b}) needs finite positive shapes"));
                }
                a / (a + b)
            }
            RewardKind::Uniform01 => 0.5,
            RewardKind::TruncGauss { mu, sigma } => {
                if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
                    return invalid(format!("truncated gaussian needs finite mu and sigma > 0, got ({mu}, {sigma})"));
                }
                let lo = -mu / sigma;
                let hi = (1.0 - mu) / sigma;
                let mass = std_normal_cdf(hi) - std_normal_cdf(lo);
                // Rejection sampling needs a non-negligible acceptance rate.
                if !(mass >= 1e-3) {
                    return invalid(format!("truncated gaussian ({mu}, {sigma}) puts mass {mass:e} on [0, 1]"));
                }
                mu + sigma * (std_normal_pdf(lo) - std_normal_pdf(hi)) / mass
            }
        };
        Ok(RewardModel { kind, mean })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(RewardKind::Bernoulli { p })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::new(RewardKind::Beta { a, b })
    }

    pub fn uniform() -> Self {
        Self::new(RewardKind::Uniform01).expect("uniform is always valid")
    }

    pub fn trunc_gauss(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(RewardKind::TruncGauss { mu, sigma })
    }

    pub fn kind(&self) -> RewardKind {
        self.kind
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Analytic variance, used for standard errors in tests and reports.
    pub fn variance(&self) -> f64 {
        match self.kind {
            RewardKind::Bernoulli { p } => p * (1.0 - p),
            RewardKind::Beta { a, b } => a * b / ((a + b).powi(2) * (a + b + 1.0)),
            RewardKind::Uniform01 => 1.0 / 12.0,
            RewardKind::TruncGauss { mu, sigma } => {
                let lo = -mu / sigma;
                let hi = (1.0 - mu) / sigma;
                let mass = std_normal_cdf(hi) - std_normal_cdf(lo);
                let r = (std_normal_pdf(lo) - std_normal_pdf(hi)) / mass;
                let s = (lo * std_normal_pdf(lo) - hi * std_normal_pdf(hi)) / mass;
                sigma * sigma * (1.0 + s - r * r)
            }
        }
    }

    /// Whether the support reaches both endpoints of `[0, 1]`.
    ///
    /// Every closed-form family offered here has infimum 0 and supremum 1
    /// of its support, so this holds for all valid models.
    pub fn satisfies_assumption1(&self) -> bool {
        match self.kind {
            RewardKind::Bernoulli { p } => p > 0.0 && p < 1.0,
            RewardKind::Beta { a, b } => a > 0.0 && b > 0.0,
            RewardKind::Uniform01 => true,
            RewardKind::TruncGauss { .. } => true,
        }
    }

    /// Whether every draw is 0 or 1.
    pub fn is_binary(&self) -> bool {
        matches!(self.kind, RewardKind::Bernoulli { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            RewardKind::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            RewardKind::Beta { a, b } => Beta::new(a, b).expect("validated shapes").sample(rng),
            RewardKind::Uniform01 => rng.random::<f64>(),
            RewardKind::TruncGauss { mu, sigma } => loop {
                let z: f64 = StandardNormal.sample(rng);
                let x = mu + sigma * z;
                if (0.0..=1.0).contains(&x) {
                    break x;
                }
            },
        }
    }
}

/// Latent type of an arm. `Type1` is the optimal type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArmType {
    Type1,
    Type2,
}

/// A countable-armed bandit instance with two types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct CabInstance {
    mu1: f64,
    mu2: f64,
    alpha: f64,
    family1: Vec<RewardModel>,
    family2: Vec<RewardModel>,
    zero_gap: bool,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    mu1: f64,
    mu2: f64,
    alpha: f64,
    family1: Vec<RewardModel>,
    family2: Vec<RewardModel>,
}

impl TryFrom<RawInstance> for CabInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        if raw.mu1 == raw.mu2 {
            let mut family = raw.family1;
            family.extend(raw.family2);
            CabInstance::zero_gap(raw.mu1, raw.alpha, family)
        } else {
            CabInstance::new(raw.mu1, raw.mu2, raw.alpha, raw.family1, raw.family2)
        }
    }
}

impl From<CabInstance> for RawInstance {
    fn from(inst: CabInstance) -> Self {
        RawInstance {
            mu1: inst.mu1,
            mu2: inst.mu2,
            alpha: inst.alpha,
            family1: inst.family1,
            family2: inst.family2,
        }
    }
}

fn check_family(name: &str, mu: f64, family: &[RewardModel]) -> Result<()> {
    if family.is_empty() {
        return Err(Error::InvalidInstance(format!("{name} is empty")));
    }
    for model in family {
        if (model.mean() - mu).abs() > MEAN_TOLERANCE {
            return Err(Error::InvalidInstance(format!(
                "{name} member {:?} has mean {} but the type mean is {mu}",
                model.kind(),
                model.mean()
            )));
        }
    }
    Ok(())
}

impl CabInstance {
    pub fn new(
        mu1: f64,
        mu2: f64,
        alpha: f64,
        family1: Vec<RewardModel>,
        family2: Vec<RewardModel>,
    ) -> Result<Self> {
        if !(mu1 > 0.0 && mu1 < 1.0 && mu2 > 0.0 && mu2 < 1.0) {
            return Err(Error::InvalidInstance(format!("means ({mu1}, {mu2}) must lie in (0, 1)")));
        }
        if !(mu1 > mu2) {
            return Err(Error::InvalidInstance(format!(
                "type 1 must be optimal: mu1 = {mu1} <= mu2 = {mu2}"
            )));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidInstance(format!("alpha = {alpha} outside [0, 1]")));
        }
        check_family("family1", mu1, &family1)?;
        check_family("family2", mu2, &family2)?;
        Ok(CabInstance { mu1, mu2, alpha, family1, family2, zero_gap: false })
    }

    /// Both types carry mean `mu` and share `family`.
    pub fn zero_gap(mu: f64, alpha: f64, family: Vec<RewardModel>) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::InvalidInstance(format!("mean {mu} must lie in (0, 1)")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidInstance(format!("alpha = {alpha} outside [0, 1]")));
        }
        check_family("family", mu, &family)?;
        Ok(CabInstance {
            mu1: mu,
            mu2: mu,
            alpha,
            family1: family.clone(),
            family2: family,
            zero_gap: true,
        })
    }

    /// Single-Bernoulli family per type.
    pub fn bernoulli(mu1: f64, mu2: f64, alpha: f64) -> Result<Self> {
        Self::new(
            mu1,
            mu2,
            alpha,
            vec![RewardModel::bernoulli(mu1)?],
            vec![RewardModel::bernoulli(mu2)?],
        )
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gap(&self) -> f64 {
        self.mu1 - self.mu2
    }

    pub fn is_zero_gap(&self) -> bool {
        self.zero_gap
    }

    pub fn family(&self, ty: ArmType) -> &[RewardModel] {
        match ty {
            ArmType::Type1 => &self.family1,
            ArmType::Type2 => &self.family2,
        }
    }

    pub fn type_mean(&self, ty: ArmType) -> f64 {
        match ty {
            ArmType::Type1 => self.mu1,
            ArmType::Type2 => self.mu2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))
    }
}

/// An arm drawn from the reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub label: u64,
    pub arm_type: ArmType,
    pub model: RewardModel,
}

impl Arm {
    pub fn sample_reward<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.model.sample(rng)
    }
}

/// Lazily realized infinite population of arms.
///
/// The `k`-th draw depends only on the reservoir stream and `k`, so replaying
/// a seed reproduces the same sequence of `(type, model)` pairs.
#[derive(Debug, Clone)]
pub struct Reservoir<'a, R> {
    instance: &'a CabInstance,
    rng: R,
    next_label: u64,
}

impl<'a, R: Rng> Reservoir<'a, R> {
    pub fn new(instance: &'a CabInstance, rng: R) -> Self {
        Reservoir { instance, rng, next_label: 0 }
    }

    pub fn draw_new_arm(&mut self) -> Arm {
        draw_new_arm(self.instance, &mut self.rng, &mut self.next_label)
    }

    pub fn instance(&self) -> &CabInstance {
        self.instance
    }

    /// Number of arms drawn so far.
    pub fn drawn(&self) -> u64 {
        self.next_label
    }
}

/// Draws a fresh arm: type 1 with probability `alpha`, then a uniformly
/// chosen model of that type's family. `next_label` is advanced.
pub fn draw_new_arm<R: Rng + ?Sized>(instance: &CabInstance, rng: &mut R, next_label: &mut u64) -> Arm {
    // Two draws per arm regardless of alpha keeps the stream aligned across instances.
    let u: f64 = rng.random();
    let arm_type = if u < instance.alpha { ArmType::Type1 } else { ArmType::Type2 };
    let family = instance.family(arm_type);
    let pick = rng.random_range(0..family.len());
    let label = *next_label;
    *next_label += 1;
    Arm { label, arm_type, model: family[pick] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::Seed;
    use proptest::prelude::*;

    fn empirical_mean(model: &RewardModel, draws: usize, seed: u64) -> (f64, bool) {
        let mut rng = Seed(seed).stream("reward-test");
        let mut sum = 0.0;
        let mut in_range = true;
        for _ in 0..draws {
            let x = model.sample(&mut rng);
            in_range &= (0.0..=1.0).contains(&x);
            sum += x;
        }
        (sum / draws as f64, in_range)
    }

    #[test]
    fn bernoulli_rejects_degenerate_p() {
        assert!(RewardModel::bernoulli(1.0).is_err());
        assert!(RewardModel::bernoulli(0.0).is_err());
        assert!(RewardModel::bernoulli(0.3).is_ok());
    }

    #[test]
    fn bernoulli_empirical_mean() {
        let model = RewardModel::bernoulli(0.3).unwrap();
        let (mean, in_range) = empirical_mean(&model, 100_000, 1);
        assert!(in_range);
        assert!((mean - 0.3).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn uniform_empirical_mean() {
        let (mean, in_range) = empirical_mean(&RewardModel::uniform(), 100_000, 2);
        assert!(in_range);
        assert!((mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn wide_trunc_gauss_stays_in_unit_interval() {
        let model = RewardModel::trunc_gauss(0.5, 1.5).unwrap();
        let (_, in_range) = empirical_mean(&model, 20_000, 3);
        assert!(in_range);
        // Symmetric truncation leaves the mean at the center.
        assert!((model.mean() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trunc_gauss_mean_matches_quadrature() {
        // Independent check: midpoint quadrature of x * phi over [0, 1].
        let (mu, sigma) = (0.2, 0.3);
        let model = RewardModel::trunc_gauss(mu, sigma).unwrap();
        let steps = 200_000;
        let h = 1.0 / steps as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..steps {
            let x = (i as f64 + 0.5) * h;
            let w = (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp();
            num += x * w;
            den += w;
        }
        assert!((model.mean() - num / den).abs() < 1e-9);
    }

    #[test]
    fn analytic_means_and_five_standard_errors() {
        let models = [
            RewardModel::bernoulli(0.9).unwrap(),
            RewardModel::beta(2.0, 5.0).unwrap(),
            RewardModel::uniform(),
            RewardModel::trunc_gauss(0.3, 0.4).unwrap(),
        ];
        let draws = 1_000_000;
        for (i, model) in models.iter().enumerate() {
            let (mean, in_range) = empirical_mean(model, draws, 10 + i as u64);
            assert!(in_range);
            let se = (model.variance() / draws as f64).sqrt();
            assert!(
                (mean - model.mean()).abs() < 5.0 * se,
                "{:?}: empirical {mean} vs analytic {}",
                model.kind(),
                model.mean()
            );
        }
        assert!((models[1].mean() - 2.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn assumption1_flags() {
        assert!(RewardModel::bernoulli(0.5).unwrap().satisfies_assumption1());
        assert!(RewardModel::beta(0.5, 3.0).unwrap().satisfies_assumption1());
        assert!(RewardModel::uniform().satisfies_assumption1());
        assert!(RewardModel::trunc_gauss(0.5, 0.1).unwrap().satisfies_assumption1());
    }

    #[test]
    fn instance_validation() {
        assert!(CabInstance::bernoulli(0.5, 0.9, 0.5).is_err());
        assert!(CabInstance::bernoulli(0.5, 0.5, 0.5).is_err());
        assert!(CabInstance::bernoulli(0.9, 0.5, 1.5).is_err());
        let bad_family = CabInstance::new(
            0.9,
            0.5,
            0.5,
            vec![RewardModel::bernoulli(0.9).unwrap(), RewardModel::uniform()],
            vec![RewardModel::uniform()],
        );
        assert!(bad_family.is_err());
        let inst = CabInstance::zero_gap(0.5, 0.5, vec![RewardModel::uniform()]).unwrap();
        assert_eq!(inst.gap(), 0.0);
        assert!(inst.is_zero_gap());
    }

    #[test]
    fn instance_json_field_names() {
        let inst = CabInstance::new(
            0.5,
            0.2,
            0.25,
            vec![RewardModel::bernoulli(0.5).unwrap(), RewardModel::uniform()],
            vec![RewardModel::beta(1.0, 4.0).unwrap()],
        )
        .unwrap();
        let json = inst.to_json();
        assert_eq!(
            json,
            r#"{"mu1":0.5,"mu2":0.2,"alpha":0.25,"family1":[{"kind":"bernoulli","p":0.5},{"kind":"uniform01"}],"family2":[{"kind":"beta","a":1.0,"b":4.0}]}"#
        );
        assert_eq!(CabInstance::from_json(&json).unwrap(), inst);
        assert!(CabInstance::from_json(r#"{"mu1":0.5,"mu2":0.2,"alpha":0.2,"family1":[{"kind":"bernoulli","p":0.4}],"family2":[{"kind":"bernoulli","p":0.2}]}"#).is_err());
    }

    #[test]
    fn degenerate_reservoirs() {
        let mut label = 0;
        let all_one = CabInstance::bernoulli(0.9, 0.5, 1.0).unwrap();
        let all_two = CabInstance::bernoulli(0.9, 0.5, 0.0).unwrap();
        let mut rng = Seed(5).stream("reservoir");
        for _ in 0..1000 {
            assert_eq!(draw_new_arm(&all_one, &mut rng, &mut label).arm_type, ArmType::Type1);
            assert_eq!(draw_new_arm(&all_two, &mut rng, &mut label).arm_type, ArmType::Type2);
        }
        assert_eq!(label, 2000);
    }

    #[test]
    fn balanced_reservoir_fraction() {
        let inst = CabInstance::bernoulli(0.9, 0.5, 0.5).unwrap();
        let mut res = Reservoir::new(&inst, Seed(9).stream("reservoir"));
        let draws = 100_000;
        let mut ones = 0;
        let mut last = None;
        for _ in 0..draws {
            let arm = res.draw_new_arm();
            if let Some(prev) = last {
                assert!(arm.label > prev);
            }
            last = Some(arm.label);
            if arm.arm_type == ArmType::Type1 {
                ones += 1;
                assert_eq!(arm.model.mean(), 0.9);
            }
        }
        let frac = ones as f64 / draws as f64;
        assert!((frac - 0.5).abs() < 0.01, "frac = {frac}");
    }

    #[test]
    fn uniform_choice_within_family() {
        let inst = CabInstance::new(
            0.5,
            0.2,
            1.0,
            vec![RewardModel::bernoulli(0.5).unwrap(), RewardModel::uniform()],
            vec![RewardModel::bernoulli(0.2).unwrap()],
        )
        .unwrap();
        let mut res = Reservoir::new(&inst, Seed(1).stream("reservoir"));
        let uniform = (0..10_000).filter(|_| res.draw_new_arm().model == RewardModel::uniform()).count();
        assert!((uniform as f64 / 10_000.0 - 0.5).abs() < 0.02);
    }

    proptest! {
        #[test]
        fn reservoir_replays_bit_exactly(seed in any::<u64>(), alpha in 0.0f64..=1.0) {
            let inst = CabInstance::bernoulli(0.8, 0.3, alpha).unwrap();
            let mut a = Reservoir::new(&inst, Seed(seed).stream("reservoir"));
            let mut b = Reservoir::new(&inst, Seed(seed).stream("reservoir"));
            for _ in 0..64 {
                prop_assert_eq!(a.draw_new_arm(), b.draw_new_arm());
            }
        }

        #[test]
        fn samples_in_unit_interval(seed in any::<u64>(), mu in -0.5f64..1.5, sigma in 0.05f64..2.0) {
            let mut rng = Seed(seed).stream("p");
            if let Ok(model) = RewardModel::trunc_gauss(mu, sigma) {
                for _ in 0..32 {
                    let x = model.sample(&mut rng);
                    prop_assert!((0.0..=1.0).contains(&x));
                }
            }
        }
    }
}
