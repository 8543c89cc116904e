use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::schedule::ThetaSchedule;

/// Outcome of the paired-difference test at one sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestOutcome {
    /// `|sum| < theta_m`: the set looks homogeneous and is discarded.
    Fire,
    Survive,
}

/// Fires iff `|prefix_sums[m - 1]| < theta_m`, where `prefix_sums[k]` is
/// `sum_{j <= k + 1} (X_{1,j} - X_{2,j})`.
pub fn paired_test<T: Real>(prefix_sums: &[T], m: u64, schedule: &ThetaSchedule<T>) -> Result<TestOutcome> {
    if m == 0 || m > prefix_sums.len() as u64 {
        return Err(Error::Domain(format!(
            "paired test at m = {m} with {} paired samples",
            prefix_sums.len()
        )));
    }
    Ok(test_sum(prefix_sums[(m - 1) as usize], schedule.theta(m)))
}

#[inline]
pub(crate) fn test_sum<T: Real>(sum: T, threshold: T) -> TestOutcome {
    if sum.abs() < threshold {
        TestOutcome::Fire
    } else {
        TestOutcome::Survive
    }
}

/// Prefix sums of paired differences of two reward streams.
pub fn diff_prefix_sums(first: &[f64], second: &[f64]) -> Vec<f64> {
    first
        .iter()
        .zip(second)
        .scan(0.0, |acc, (a, b)| {
            *acc += a - b;
            Some(*acc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_threshold_at_one() {
        let s = ThetaSchedule::<f64>::regret_preset();
        assert_eq!(paired_test(&[0.9999], 1, &s).unwrap(), TestOutcome::Survive);
        assert_eq!(paired_test(&[0.99], 1, &s).unwrap(), TestOutcome::Fire);
    }

    #[test]
    fn zero_sum_always_fires() {
        let s = ThetaSchedule::<f64>::regret_preset();
        let zeros = vec![0.0; 1000];
        for m in 1..=1000 {
            assert_eq!(paired_test(&zeros, m, &s).unwrap(), TestOutcome::Fire);
        }
    }

    #[test]
    fn fires_below_theta_ten() {
        let s = ThetaSchedule::<f64>::regret_preset();
        let mut sums = vec![0.0; 10];
        sums[9] = 5.0;
        assert_eq!(paired_test(&sums, 10, &s).unwrap(), TestOutcome::Fire);
        sums[9] = -8.4;
        assert_eq!(paired_test(&sums, 10, &s).unwrap(), TestOutcome::Survive);
    }

    #[test]
    fn separated_streams_always_survive() {
        let s = ThetaSchedule::<f64>::regret_preset();
        let sums = diff_prefix_sums(&vec![1.0; 5000], &vec![0.0; 5000]);
        for m in 1..=5000 {
            assert_eq!(paired_test(&sums, m, &s).unwrap(), TestOutcome::Survive);
        }
    }

    #[test]
    fn out_of_range() {
        let s = ThetaSchedule::<f64>::regret_preset();
        assert!(paired_test(&[1.0, 2.0], 0, &s).is_err());
        assert!(paired_test(&[1.0, 2.0], 3, &s).is_err());
    }

    #[test]
    fn single_precision() {
        let s = ThetaSchedule::<f32>::regret_preset();
        assert_eq!(paired_test(&[0.9999f32], 1, &s).unwrap(), TestOutcome::Survive);
    }
}
