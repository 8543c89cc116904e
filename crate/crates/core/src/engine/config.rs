use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::export::ExportFormat;
use crate::cab::default_checkpoints;
use crate::cab::record::FULL_TRAJECTORY_LIMIT;
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::reward::{CabInstance, RewardModel};
use crate::schedule::ThetaSchedule;
use crate::zerogap::{check_zero_gap, ZeroGapReward, DEFAULT_BINS, DEFAULT_EPSILONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EtcRegret,
    AlgRegret,
    Zerogap,
    Beta,
    Lemma1,
    EpochStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPair {
    pub model1: RewardModel,
    pub model2: RewardModel,
    /// Reported gap; the difference of the means when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl ModelPair {
    pub fn new(model1: RewardModel, model2: RewardModel) -> Self {
        ModelPair { model1, model2, delta: None }
    }

    /// Symmetric Bernoulli pair with nominal gap `delta`.
    pub fn symmetric_bernoulli(delta: f64) -> Result<Self> {
        let (model1, model2) = crate::beta::symmetric_bernoulli_pair(delta)?;
        Ok(ModelPair { model1, model2, delta: Some(delta) })
    }

    pub fn gap(&self) -> f64 {
        self.delta.unwrap_or_else(|| (self.model1.mean() - self.model2.mean()).abs())
    }
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_epsilons() -> Vec<f64> {
    DEFAULT_EPSILONS.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    EtcRegret {
        instance: CabInstance,
        delta: f64,
    },
    AlgRegret {
        instance: CabInstance,
        policy: Policy,
        schedule: ThetaSchedule<f64>,
        /// Survival constant and `C2` for the upper-bound overlay, if known.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference_beta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference_c2: Option<f64>,
    },
    Zerogap {
        policy: Policy,
        reward1: ZeroGapReward,
        reward2: ZeroGapReward,
        #[serde(default = "default_bins")]
        bins: usize,
        #[serde(default = "default_epsilons")]
        epsilons: Vec<f64>,
    },
    /// `n` is the truncation `M`.
    Beta {
        pairs: Vec<ModelPair>,
        schedule: ThetaSchedule<f64>,
        #[serde(default)]
        diagnostic: bool,
    },
    /// Forced pair under UCB1; `n` is the horizon.
    Lemma1 {
        model1: RewardModel,
        model2: RewardModel,
        schedule: ThetaSchedule<f64>,
    },
    EpochStats {
        model1: RewardModel,
        model2: RewardModel,
        schedule: ThetaSchedule<f64>,
        policy: Policy,
    },
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::EtcRegret { .. } => ExperimentKind::EtcRegret,
            Experiment::AlgRegret { .. } => ExperimentKind::AlgRegret,
            Experiment::Zerogap { .. } => ExperimentKind::Zerogap,
            Experiment::Beta { .. } => ExperimentKind::Beta,
            Experiment::Lemma1 { .. } => ExperimentKind::Lemma1,
            Experiment::EpochStats { .. } => ExperimentKind::EpochStats,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<ExportFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: u64,
    pub reps: u64,
    pub master_seed: u64,
    /// Regret checkpoints; powers of two up to `n` plus `n` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "is_default_output")]
    pub output: OutputSpec,
}

fn is_default_output(o: &OutputSpec) -> bool {
    *o == OutputSpec::default()
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, n: u64, reps: u64, master_seed: u64) -> Self {
        ExperimentConfig { experiment, n, reps, master_seed, checkpoints: None, output: OutputSpec::default() }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.kind()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The config with its output section cleared: what a result depends on.
    pub fn without_output(&self) -> Self {
        ExperimentConfig { output: OutputSpec::default(), ..self.clone() }
    }

    /// SHA-256 of the compact JSON form without the output section, hex
    /// encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&self.without_output()).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Checkpoints used for regret aggregation.
    ///
    /// Adaptive-algorithm runs also record `n / 4` so growth between the
    /// two horizons can be read off a single batch.
    pub fn resolved_checkpoints(&self) -> Result<Vec<u64>> {
        let n = self.n;
        let mut cps = match &self.checkpoints {
            Some(c) => c.clone(),
            None => default_checkpoints(n),
        };
        if self.kind() == ExperimentKind::AlgRegret && n >= 4 {
            cps.push(n / 4);
        }
        cps.sort_unstable();
        cps.dedup();
        if let Some(&bad) = cps.iter().find(|&&c| c == 0 || c > n) {
            return Err(Error::Config(format!("checkpoint {bad} outside 1..={n}")));
        }
        if n > FULL_TRAJECTORY_LIMIT {
            let available = default_checkpoints(n);
            if let Some(&bad) = cps.iter().find(|c| !available.contains(c)) {
                return Err(Error::Config(format!(
                    "horizon {n} keeps only power-of-two checkpoints; {bad} is not one"
                )));
            }
        }
        Ok(cps)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let need_schedule = |s: &ThetaSchedule<f64>| -> Result<()> {
            let report = s.validate(n);
            if report.accepted() {
                Ok(())
            } else {
                Err(Error::InvalidSchedule(report.failures().join("; ")))
            }
        };
        match &self.experiment {
            Experiment::EtcRegret { delta, .. } => {
                if n < 2 {
                    return Err(Error::Config(format!("horizon n = {n} must be at least 2")));
                }
                if !(*delta > 0.0 && *delta <= 1.0) {
                    return Err(Error::Config(format!("calibration delta = {delta} must lie in (0, 1]")));
                }
                self.resolved_checkpoints()?;
            }
            Experiment::AlgRegret { schedule, reference_beta, .. } => {
                if n < 2 {
                    return Err(Error::Config(format!("horizon n = {n} must be at least 2")));
                }
                if let Some(b) = reference_beta {
                    if !(*b > 0.0 && *b <= 1.0) {
                        return Err(Error::Config(format!("reference beta = {b} must lie in (0, 1]")));
                    }
                }
                need_schedule(schedule)?;
                self.resolved_checkpoints()?;
            }
            Experiment::Zerogap { policy, reward1, reward2, bins, epsilons } => {
                check_zero_gap(policy, reward1, reward2)?;
                if n == 0 || *bins == 0 {
                    return Err(Error::Config("zero-gap runs need n >= 1 and bins >= 1".to_string()));
                }
                if let Some(e) = epsilons.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
                    return Err(Error::Config(format!("epsilon {e} must be finite and nonnegative")));
                }
            }
            Experiment::Beta { pairs, schedule, diagnostic } => {
                if n == 0 {
                    return Err(Error::Config("truncation n must be positive".to_string()));
                }
                if pairs.is_empty() {
                    return Err(Error::Config("no model pairs given".to_string()));
                }
                if !diagnostic && pairs.iter().any(|p| p.model1.mean() == p.model2.mean()) {
                    return Err(Error::Config("equal means need diagnostic mode".to_string()));
                }
                need_schedule(schedule)?;
            }
            Experiment::Lemma1 { schedule, .. } | Experiment::EpochStats { schedule, .. } => {
                if n == 0 {
                    return Err(Error::Config("horizon n must be positive".to_string()));
                }
                need_schedule(schedule)?;
            }
        }
        Ok(())
    }
}
