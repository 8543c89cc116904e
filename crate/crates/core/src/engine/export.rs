use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::aggregate::{AggregateResult, Outcome, RegretAggregate};
use crate::error::{Error, Result};
use crate::reward::CabInstance;
use crate::stream::Seed;

pub const ZEROGAP_CSV_HEADER: &str = "policy,seed,n,N1_over_n";
pub const BETA_CSV_HEADER: &str = "delta,m0,gamma,M,reps,beta_hat,std_error,checkpoint,survival";
pub const LEMMA1_CSV_HEADER: &str = "rep,seed,adaptive_m,plays,censored,tau_prime,equal";
pub const EPOCH_STATS_CSV_HEADER: &str = "rep,seed,plays,m,censored";

/// Header of the per-replication regret table for the given checkpoints.
pub fn regret_csv_header(checkpoints: &[u64]) -> String {
    let mut cols: Vec<String> =
        ["algo", "seed", "n", "alpha", "mu1", "mu2", "delta_or_m0_gamma"].iter().map(|s| s.to_string()).collect();
    cols.extend(checkpoints.iter().map(|c| format!("regret_at_{c}")));
    cols.push("epochs_count".to_string());
    cols.push("plays_on_type2".to_string());
    cols.join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
        })
    }
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::Config(format!("unknown format {other:?}; expected csv or json"))),
        }
    }
}

pub fn to_json_string(result: &AggregateResult) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("result serializes");
    s.push('\n');
    s
}

/// CSV form. The first line is a `# config_hash: ...` comment; the header
/// row follows.
pub fn to_csv_string(result: &AggregateResult) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    match &result.outcome {
        Outcome::Regret(agg) => write_regret(&mut w, agg, regret_instance(result))?,
        Outcome::Zerogap(z) => {
            w.write_record(ZEROGAP_CSV_HEADER.split(','))?;
            for (rep, x) in z.samples.iter().enumerate() {
                let seed = Seed::replication(z.master_seed, rep as u64).0;
                w.write_record([z.policy.clone(), seed.to_string(), z.n.to_string(), x.to_string()])?;
            }
        }
        Outcome::Beta { estimates } => {
            w.write_record(BETA_CSV_HEADER.split(','))?;
            for e in estimates {
                let head = [
                    e.delta.to_string(),
                    e.m0.to_string(),
                    e.gamma.to_string(),
                    e.truncation.to_string(),
                    e.reps.to_string(),
                    e.estimate.to_string(),
                    e.std_error.to_string(),
                ];
                let mut summary = head.to_vec();
                summary.extend([String::new(), String::new()]);
                w.write_record(&summary)?;
                for (c, p) in &e.survival_curve {
                    let mut row = head.to_vec();
                    row.extend([c.to_string(), p.to_string()]);
                    w.write_record(&row)?;
                }
            }
        }
        Outcome::Lemma1(l) => {
            w.write_record(LEMMA1_CSV_HEADER.split(','))?;
            for (rep, (seed, c)) in l.seeds.iter().zip(&l.checks).enumerate() {
                w.write_record([
                    rep.to_string(),
                    seed.to_string(),
                    c.adaptive.m().to_string(),
                    c.adaptive.plays().to_string(),
                    c.adaptive.is_censored().to_string(),
                    c.tau_prime.map(|t| t.to_string()).unwrap_or_default(),
                    c.equal.to_string(),
                ])?;
            }
        }
        Outcome::EpochStats(s) => {
            w.write_record(EPOCH_STATS_CSV_HEADER.split(','))?;
            for (rep, (seed, end)) in s.seeds.iter().zip(&s.stats.ends).enumerate() {
                w.write_record([
                    rep.to_string(),
                    seed.to_string(),
                    end.plays().to_string(),
                    end.m().to_string(),
                    end.is_censored().to_string(),
                ])?;
            }
        }
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
        .map_err(|e| Error::Io(e.to_string()))?;
    Ok(format!("# config_hash: {}\n{body}", result.config_hash))
}

fn regret_instance(result: &AggregateResult) -> &CabInstance {
    use super::config::Experiment;
    match &result.config.experiment {
        Experiment::EtcRegret { instance, .. } | Experiment::AlgRegret { instance, .. } => instance,
        _ => unreachable!("regret outcome only comes from regret experiments"),
    }
}

fn write_regret(w: &mut csv::Writer<Vec<u8>>, agg: &RegretAggregate, instance: &CabInstance) -> Result<()> {
    let cps: Vec<u64> = agg.checkpoints.iter().map(|c| c.checkpoint).collect();
    w.write_record(regret_csv_header(&cps).split(','))?;
    let n = cps.last().copied().unwrap_or(0);
    for run in &agg.runs {
        let mut row = vec![
            agg.algo.clone(),
            run.seed.to_string(),
            n.to_string(),
            instance.alpha().to_string(),
            instance.mu1().to_string(),
            instance.mu2().to_string(),
            agg.tuning.clone(),
        ];
        row.extend(run.regret.iter().map(|r| r.to_string()));
        row.push(run.epochs.to_string());
        row.push(run.plays_on_type2.to_string());
        w.write_record(&row)?;
    }
    Ok(())
}

/// Writes `result` to `path`.
pub fn export(result: &AggregateResult, format: ExportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ExportFormat::Json => to_json_string(result),
        ExportFormat::Csv => to_csv_string(result)?,
    };
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_json(path: &Path) -> Result<AggregateResult> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_batch, Experiment, ExperimentConfig};
    use crate::policy::Policy;
    use crate::reward::RewardModel;
    use crate::zerogap::ZeroGapReward;

    #[test]
    fn regret_header_schema() {
        assert_eq!(
            regret_csv_header(&[1, 2, 4]),
            "algo,seed,n,alpha,mu1,mu2,delta_or_m0_gamma,regret_at_1,regret_at_2,regret_at_4,epochs_count,plays_on_type2"
        );
    }

    #[test]
    fn zerogap_csv_rows() {
        let r = ZeroGapReward::model(RewardModel::bernoulli(0.5).unwrap());
        let cfg = ExperimentConfig::new(
            Experiment::Zerogap { policy: Policy::UCB1, reward1: r, reward2: r, bins: 10, epsilons: vec![0.4] },
            100,
            3,
            1,
        );
        let res = run_batch(&cfg, 2).unwrap();
        let csv = to_csv_string(&res).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# config_hash: "));
        assert_eq!(lines[1], ZEROGAP_CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("ucb1,"));
    }

    #[test]
    fn format_parse() {
        assert_eq!("csv".parse::<ExportFormat>().unwrap(), ExportFormat::Csv);
        assert!("xml".parse::<ExportFormat>().is_err());
    }
}
