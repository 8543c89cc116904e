//! Pass/fail checks evaluated on an aggregate, used by `--assert` runs.

use serde::{Deserialize, Serialize};

use super::aggregate::{AggregateResult, Outcome};
use super::config::Experiment;
use crate::cab::bounds::etc_regret_bound;
use crate::policy::Policy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.to_string(), passed, detail }
    }
}

/// Monte-Carlo slack, in standard errors.
const SLACK: f64 = 2.0;

pub fn assert_checks(result: &AggregateResult) -> Vec<Check> {
    let mut out = Vec::new();
    let n = result.config.n;
    match (&result.config.experiment, &result.outcome) {
        (Experiment::EtcRegret { instance, delta }, Outcome::Regret(agg)) => {
            if let (Some(last), Ok(bound)) =
                (agg.final_stat(), etc_regret_bound::<f64>(n, *delta, instance.gap(), instance.alpha()))
            {
                let lhs = last.mean + SLACK * last.std_error;
                out.push(Check::new(
                    "etc-bound-dominance",
                    lhs <= bound.value,
                    format!("mean + 2se = {lhs:.3} vs bound {:.3}", bound.value),
                ));
            }
        }
        (Experiment::AlgRegret { .. }, Outcome::Regret(agg)) => {
            if let (Some(q), Some(full)) = (agg.at(n / 4), agg.at(n)) {
                let ratio = full.mean / q.mean;
                out.push(Check::new(
                    "alg-log-growth",
                    q.mean > 0.0 && ratio < 2.0,
                    format!("R({n}) / R({}) = {ratio:.3}", n / 4),
                ));
            }
        }
        (Experiment::Zerogap { policy, .. }, Outcome::Zerogap(z)) => {
            for row in &z.tails {
                if let Some(ok) = row.within_bound(SLACK) {
                    out.push(Check::new(
                        &format!("tail-bound-eps-{}", row.epsilon),
                        ok,
                        format!("empirical {:.3e} vs bound {:.3e}", row.empirical, row.bound.unwrap_or(f64::NAN)),
                    ));
                }
            }
            if matches!(policy, Policy::Ucb { .. }) && z.reps > 1 {
                let dev = (z.summary.mean - 0.5).abs();
                out.push(Check::new(
                    "label-symmetry",
                    dev <= 3.0 * z.summary.std_error,
                    format!("|mean - 1/2| = {dev:.3e}, 3se = {:.3e}", 3.0 * z.summary.std_error),
                ));
            }
        }
        (Experiment::Beta { .. }, Outcome::Beta { estimates }) => {
            for e in estimates {
                let monotone = e.survival_curve.windows(2).all(|w| w[0].1 >= w[1].1);
                out.push(Check::new(
                    &format!("survival-curve-monotone-delta-{}", e.delta),
                    monotone,
                    format!("estimate {:.4} +- {:.4}", e.estimate, e.std_error),
                ));
            }
            let mut sorted: Vec<_> = estimates.iter().collect();
            sorted.sort_by(|a, b| a.delta.total_cmp(&b.delta));
            for w in sorted.windows(2) {
                let joint = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
                out.push(Check::new(
                    &format!("beta-monotone-{}-{}", w[0].delta, w[1].delta),
                    w[1].estimate - w[0].estimate >= -SLACK * joint,
                    format!("{:.4} -> {:.4}", w[0].estimate, w[1].estimate),
                ));
            }
        }
        (Experiment::Lemma1 { .. }, Outcome::Lemma1(l)) => {
            out.push(Check::new(
                "lemma1-pathwise-equality",
                l.equal == result.reps,
                format!("{}/{} paths equal", l.equal, result.reps),
            ));
        }
        (Experiment::EpochStats { model1, model2, .. }, Outcome::EpochStats(s)) => {
            if model1 == model2 {
                out.push(Check::new(
                    "homogeneous-censoring",
                    s.stats.censored_fraction < 0.05,
                    format!("censored fraction {:.4}", s.stats.censored_fraction),
                ));
            }
        }
        _ => out.push(Check::new("outcome-kind", false, "outcome does not match the experiment".to_string())),
    }
    out
}
