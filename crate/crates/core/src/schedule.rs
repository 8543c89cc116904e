//! The deterministic threshold sequence used by the paired-difference test.
//!
//! `theta_m = sqrt(m^2 / (m + m0) * (4 ln(m + m0) + gamma ln ln(m + m0)))`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Threshold schedule with offset `m0` and log-log weight `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule<T>", into = "RawSchedule<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ThetaSchedule<T: Real> {
    m0: u64,
    gamma: T,
}

#[derive(Serialize, Deserialize)]
struct RawSchedule<T> {
    m0: u64,
    gamma: T,
}

impl<T: Real> TryFrom<RawSchedule<T>> for ThetaSchedule<T> {
    type Error = Error;

    fn try_from(raw: RawSchedule<T>) -> Result<Self> {
        ThetaSchedule::new(raw.m0, raw.gamma)
    }
}

impl<T: Real> From<ThetaSchedule<T>> for RawSchedule<T> {
    fn from(s: ThetaSchedule<T>) -> Self {
        RawSchedule { m0: s.m0, gamma: s.gamma }
    }
}

impl<T: Real> ThetaSchedule<T> {
    /// Rejects `gamma <= 2` and `m0 < 2`; for `m0 < 2` the log-log term at
    /// `m = 1` is undefined or negative.
    pub fn new(m0: u64, gamma: T) -> Result<Self> {
        if !(gamma > T::lit(2.0)) || !gamma.is_finite() {
            return Err(Error::InvalidSchedule(format!("gamma = {gamma} must be finite and > 2")));
        }
        if m0 < 2 {
            return Err(Error::InvalidSchedule(format!(
                "m0 = {m0}: m + m0 < 3 at m = 1 leaves ln ln(m + m0) undefined or negative"
            )));
        }
        Ok(ThetaSchedule { m0, gamma })
    }

    /// `(m0 = 11, gamma = 2.1)`, the default for regret runs.
    pub fn regret_preset() -> Self {
        Self::new(11, T::lit(2.1)).expect("preset is valid")
    }

    /// `(m0 = 4000, gamma = 2.1)`, the default for survival-constant estimation.
    pub fn beta_preset() -> Self {
        Self::new(4000, T::lit(2.1)).expect("preset is valid")
    }

    pub fn m0(&self) -> u64 {
        self.m0
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// `theta_m` for `m >= 1`.
    pub fn theta(&self, m: u64) -> T {
        debug_assert!(m >= 1, "theta is indexed from 1");
        theta_raw(self.m0, self.gamma, m)
    }

    /// Table of `theta_1..=theta_len`, indexed from 0.
    pub fn table(&self, len: u64) -> ThetaTable<T> {
        ThetaTable { values: (1..=len).map(|m| self.theta(m)).collect() }
    }

    pub fn validate(&self, horizon: u64) -> ValidationReport {
        validate_schedule(self.m0, self.gamma, horizon)
    }
}

fn theta_raw<T: Real>(m0: u64, gamma: T, m: u64) -> T {
    let x = T::count(m + m0);
    let mm = T::count(m);
    let ln = x.ln();
    (mm * mm / x * (T::lit(4.0) * ln + gamma * ln.ln())).sqrt()
}

/// Precomputed thresholds for hot loops.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaTable<T> {
    values: Vec<T>,
}

impl<T: Real> ThetaTable<T> {
    /// `theta_m`; `m` must be in `1..=len`.
    pub fn get(&self, m: u64) -> T {
        self.values[(m - 1) as usize]
    }

    pub fn len(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Outcome of checking a schedule's hypotheses on a finite prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub m0: u64,
    pub horizon: u64,
    /// `m + m0 >= 3` for all `m >= 1` and `gamma > 2`.
    pub domain_ok: bool,
    pub theta1_below_one: bool,
    pub ratio_decreasing: bool,
    pub nonnegative: bool,
    /// First `m` at which `theta_{m+1}/(m+1) >= theta_m/m`, if any.
    pub first_ratio_violation: Option<u64>,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.domain_ok && self.theta1_below_one && self.ratio_decreasing && self.nonnegative
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.domain_ok {
            out.push("domain: m + m0 < 3 or gamma <= 2");
        }
        if !self.theta1_below_one {
            out.push("theta_1 >= 1");
        }
        if !self.ratio_decreasing {
            out.push("theta_m / m not decreasing");
        }
        if !self.nonnegative {
            out.push("negative theta_m");
        }
        out
    }
}

/// Checks `theta_1 < 1`, `theta_m / m` strictly decreasing and `theta_m >= 0`
/// on `1..=horizon`. Works on raw parameters so invalid ones can be reported.
pub fn validate_schedule<T: Real>(m0: u64, gamma: T, horizon: u64) -> ValidationReport {
    let horizon = horizon.max(2);
    let domain_ok = m0 >= 2 && gamma > T::lit(2.0) && gamma.is_finite();
    if !domain_ok {
        return ValidationReport {
            m0,
            horizon,
            domain_ok,
            theta1_below_one: false,
            ratio_decreasing: false,
            nonnegative: false,
            first_ratio_violation: None,
        };
    }
    let theta1 = theta_raw(m0, gamma, 1);
    let mut nonnegative = theta1 >= T::zero();
    let mut prev_ratio = theta1;
    let mut first_ratio_violation = None;
    for m in 2..=horizon {
        let value = theta_raw(m0, gamma, m);
        nonnegative &= value >= T::zero();
        let ratio = value / T::count(m);
        if first_ratio_violation.is_none() && !(ratio < prev_ratio) {
            first_ratio_violation = Some(m - 1);
        }
        prev_ratio = ratio;
    }
    ValidationReport {
        m0,
        horizon,
        domain_ok,
        theta1_below_one: theta1 < T::one(),
        ratio_decreasing: first_ratio_violation.is_none(),
        nonnegative,
        first_ratio_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Frozen from a 40-digit mpmath evaluation.
    const THETA1_M0_11: f64 = 0.993_777_318_082_341_9;
    const THETA10_M0_11: f64 = 8.314_105_130_155_867;
    const THETA1_M0_4000: f64 = 0.096_967_120_240_536_54;

    #[test]
    fn frozen_values() {
        let s = ThetaSchedule::<f64>::regret_preset();
        assert_abs_diff_eq!(s.theta(1), THETA1_M0_11, epsilon = 1e-12);
        assert_abs_diff_eq!(s.theta(10), THETA10_M0_11, epsilon = 1e-11);
        assert!(s.theta(1) < 1.0);
        assert_abs_diff_eq!(ThetaSchedule::<f64>::beta_preset().theta(1), THETA1_M0_4000, epsilon = 1e-12);
    }

    #[test]
    fn single_precision_agrees() {
        let s = ThetaSchedule::<f32>::regret_preset();
        assert!((s.theta(1) as f64 - THETA1_M0_11).abs() < 1e-5);
        assert!((s.theta(10) as f64 - THETA10_M0_11).abs() < 1e-4);
    }

    #[test]
    fn ratio_drops_from_one_to_two() {
        let s = ThetaSchedule::<f64>::regret_preset();
        assert!(s.theta(1) > s.theta(2) / 2.0);
    }

    #[test]
    fn paper_configurations_accepted() {
        for m0 in [11, 4000] {
            let report = validate_schedule(m0, 2.1f64, 1_000_000);
            assert!(report.accepted(), "m0 = {m0}: {:?}", report.failures());
        }
    }

    #[test]
    fn small_offsets_rejected() {
        let report = validate_schedule(0, 2.1f64, 100);
        assert!(!report.accepted());
        assert!(!report.domain_ok);
        assert!(ThetaSchedule::new(0, 2.1f64).is_err());
        assert!(ThetaSchedule::new(1, 2.1f64).is_err());
        // m0 = 2 is in the domain but theta_1 > 1.
        let report = validate_schedule(2, 2.1f64, 100);
        assert!(report.domain_ok);
        assert!(!report.theta1_below_one);
        assert!(!report.accepted());
        assert!(ThetaSchedule::new(11, 2.0f64).is_err());
    }

    #[test]
    fn asymptotic_shape() {
        let s = ThetaSchedule::<f64>::regret_preset();
        for m in [1_000_000u64, 4_000_000, 16_000_000] {
            let mf = m as f64;
            let ratio = s.theta(m) / (2.0 * (mf * mf.ln()).sqrt());
            assert!((0.9..=1.1).contains(&ratio), "m = {m}: {ratio}");
        }
        // omega(sqrt(m)) on [1e3, 1e6]
        let mut prev = s.theta(1000) / 1000f64.sqrt();
        let mut m = 1000u64;
        while m < 1_000_000 {
            m += 997;
            let cur = s.theta(m) / (m as f64).sqrt();
            assert!(cur > prev);
            prev = cur;
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let s = ThetaSchedule::<f64>::beta_preset();
        let table = s.table(500);
        assert_eq!(table.len(), 500);
        for m in 1..=500 {
            assert_eq!(table.get(m).to_bits(), s.theta(m).to_bits());
        }
    }

    #[test]
    fn json_form() {
        let s = ThetaSchedule::<f64>::regret_preset();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"m0":11,"gamma":2.1}"#);
        assert_eq!(serde_json::from_str::<ThetaSchedule<f64>>(&json).unwrap(), s);
        assert!(serde_json::from_str::<ThetaSchedule<f64>>(r#"{"m0":0,"gamma":2.1}"#).is_err());
    }

    proptest! {
        #[test]
        fn theta_is_pure(m0 in 2u64..10_000, gamma in 2.001f64..10.0, m in 1u64..1_000_000) {
            let s = ThetaSchedule::new(m0, gamma).unwrap();
            prop_assert_eq!(s.theta(m).to_bits(), s.theta(m).to_bits());
            prop_assert!(s.theta(m) > 0.0);
        }
    }
}
