//! Closed-form reference curves for regret and zero-gap concentration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Asymptotic lower-bound constant for the `C ln(n) / gap` overlay.
pub const LOWER_BOUND_PRESET_C: f64 = 0.5;

/// `1 + pi^2 / 3`.
pub fn c1<T: Real>() -> T {
    T::one() + T::PI() * T::PI() / T::lit(3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtcBound<T> {
    pub value: T,
    /// `false` when `delta >= gap`, where the vanishing term is undefined and
    /// only the linear branch `gap * n` is returned.
    pub f_defined: bool,
}

/// The vanishing term
/// `n^{-q} / (1 - n^{-q}) * (2 ln n / delta^2 + 3)` with `q = ((gap - delta)/delta)^2`.
pub fn etc_vanishing_term<T: Real>(n: u64, delta: T, gap: T) -> Option<T> {
    if !(delta > T::zero() && delta < gap) || n < 2 {
        return None;
    }
    let nf = T::count(n);
    let q = ((gap - delta) / delta).powi(2);
    let tail = nf.powf(-q);
    let two = T::lit(2.0);
    Some(tail / (T::one() - tail) * (two / (delta * delta) * nf.ln() + T::lit(3.0)))
}

/// Expected-regret bound of the explore-then-commit scheme:
/// `min(gap n, 2 gap (1 + 1/(2 alpha)) (2 ln n / delta^2 + 1) + (gap / alpha)(2 + f))`.
pub fn etc_regret_bound<T: Real>(n: u64, delta: T, gap: T, alpha: T) -> Result<EtcBound<T>> {
    if !(delta > T::zero()) {
        return Err(Error::Domain(format!("delta = {delta} must be positive")));
    }
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    let linear = gap * T::count(n);
    let Some(f) = etc_vanishing_term(n, delta, gap) else {
        return Ok(EtcBound { value: linear, f_defined: false });
    };
    let two = T::lit(2.0);
    let nf = T::count(n);
    let explore = two * gap * (T::one() + T::one() / (two * alpha)) * (two / (delta * delta) * nf.ln() + T::one());
    let tail = gap / alpha * (two + f);
    Ok(EtcBound { value: linear.min(explore + tail), f_defined: true })
}

/// `min(gap n, 8 ln n / (gap beta) + (C1 + C2 / alpha) gap / beta)`.
pub fn alg_regret_bound<T: Real>(n: u64, gap: T, alpha: T, beta: T, c2: T) -> Result<T> {
    if !(beta > T::zero() && beta <= T::one()) {
        return Err(Error::Domain(format!("beta = {beta} must lie in (0, 1]")));
    }
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if !(c2 >= T::zero()) {
        return Err(Error::Domain(format!("C2 = {c2} must be nonnegative")));
    }
    let nf = T::count(n);
    let log_term = T::lit(8.0) * nf.ln() / (gap * beta);
    let constant = (c1::<T>() + c2 / alpha) * gap / beta;
    Ok((gap * nf).min(log_term + constant))
}

/// `C ln(n) / gap`.
pub fn lower_bound_curve<T: Real>(n: u64, gap: T, c: T) -> Result<T> {
    if !(gap > T::zero()) {
        return Err(Error::Domain(format!("gap = {gap} must be positive")));
    }
    Ok(c * T::count(n).ln() / gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound<T> {
    pub exponent: T,
    pub value: T,
    /// Exponent `<= 0`: the bound says nothing.
    pub vacuous: bool,
}

/// `2^{2 rho - 1} n^{-(2 rho - 1 - 2 rho sqrt(1 - 4 eps^2))}`.
pub fn generic_ucb_tail_bound<T: Real>(n: u64, epsilon: T, rho: T) -> Result<TailBound<T>> {
    let half = T::lit(0.5);
    if !(epsilon > T::zero() && epsilon < half) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must lie in (0, 1/2)")));
    }
    if !(rho > half) {
        return Err(Error::Domain(format!("rho = {rho} must exceed 1/2")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be positive".to_string()));
    }
    let two = T::lit(2.0);
    let root = (T::one() - T::lit(4.0) * epsilon * epsilon).sqrt();
    let exponent = two * rho - T::one() - two * rho * root;
    let value = two.powf(two * rho - T::one()) * T::count(n).powf(-exponent);
    Ok(TailBound { exponent, value, vacuous: exponent <= T::zero() })
}

/// `8 n^{-(3 - 4 sqrt(1 - 4 eps^2))}`, the UCB1 instance of the generic bound.
pub fn ucb1_tail_bound<T: Real>(n: u64, epsilon: T) -> Result<TailBound<T>> {
    let half = T::lit(0.5);
    if !(epsilon > T::zero() && epsilon < half) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must lie in (0, 1/2)")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be positive".to_string()));
    }
    let root = (T::one() - T::lit(4.0) * epsilon * epsilon).sqrt();
    let exponent = T::lit(3.0) - T::lit(4.0) * root;
    let value = T::lit(8.0) * T::count(n).powf(-exponent);
    Ok(TailBound { exponent, value, vacuous: exponent <= T::zero() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Expected values frozen from 40-digit mpmath evaluations.

    #[test]
    fn c1_value() {
        assert_relative_eq!(c1::<f64>(), 4.289_868_133_696_453, epsilon = 1e-14);
        assert_relative_eq!(c1::<f32>(), 4.289_868_f32, epsilon = 1e-6);
    }

    #[test]
    fn etc_vanishing_term_value() {
        let f = etc_vanishing_term(10_000, 0.2, 0.4).unwrap();
        assert_relative_eq!(f, 0.046_356_337_493_630_28, epsilon = 1e-12);
    }

    #[test]
    fn etc_bound_values() {
        let b = etc_regret_bound(10_000, 0.2, 0.4, 1.0).unwrap();
        assert!(b.f_defined);
        assert_relative_eq!(b.value, 554.638_964_853_568_4, epsilon = 1e-9);
        let b = etc_regret_bound(10_000, 0.3, 0.4, 0.5).unwrap();
        assert_relative_eq!(b.value, 423.881_488_525_232_3, epsilon = 1e-9);
    }

    #[test]
    fn etc_bound_degenerate_cases() {
        let b = etc_regret_bound(10_000, 0.4, 0.4, 0.5).unwrap();
        assert!(!b.f_defined);
        assert_eq!(b.value, 0.4 * 10_000.0);
        let tiny = etc_regret_bound(10_000, 1e-6, 1e-5, 0.5).unwrap();
        assert_relative_eq!(tiny.value, 1e-5 * 10_000.0, epsilon = 1e-12);
        assert!(etc_regret_bound(100, 0.0, 0.4, 0.5).is_err());
        assert!(etc_regret_bound(100, 0.1, 0.4, 0.0).is_err());
    }

    #[test]
    fn alg_bound_values() {
        assert_relative_eq!(
            alg_regret_bound(10_000, 0.4, 0.5, 0.4, 10.0).unwrap(),
            484.806_886_732_505_6,
            epsilon = 1e-9
        );
        assert_eq!(alg_regret_bound(1, 0.4, 0.5, 0.4, 10.0).unwrap(), 0.4);
        assert!(alg_regret_bound(100, 0.4, 0.5, 0.0, 10.0).is_err());
    }

    #[test]
    fn lower_bound_values() {
        assert_eq!(lower_bound_curve(1, 0.4, 0.5).unwrap(), 0.0);
        assert_relative_eq!(
            lower_bound_curve(10_000, 0.4, LOWER_BOUND_PRESET_C).unwrap(),
            11.512_925_464_970_23,
            epsilon = 1e-12
        );
        assert!(lower_bound_curve(10, 0.0, 0.5).is_err());
    }

    #[test]
    fn ucb1_tail_values() {
        let b = ucb1_tail_bound(1000, 0.45).unwrap();
        assert_relative_eq!(b.exponent, 1.256_440_422_583_730_6, epsilon = 1e-12);
        assert_relative_eq!(b.value, 1.360_719_846_795_131e-3, epsilon = 1e-12);
        assert!(!b.vacuous);
        let b = ucb1_tail_bound(10_000, 0.45).unwrap();
        assert_relative_eq!(b.value, 7.539_252_638_495_876e-5, epsilon = 1e-14);
    }

    #[test]
    fn vacuous_threshold() {
        let eps = 7f64.sqrt() / 8.0;
        let b = ucb1_tail_bound(1000, eps).unwrap();
        assert!(b.exponent.abs() < 1e-12);
        assert_relative_eq!(b.value, 8.0, epsilon = 1e-9);
        assert!(ucb1_tail_bound(1000, 0.3).unwrap().vacuous);
        assert!(!ucb1_tail_bound(1000, 0.34).unwrap().vacuous);
    }

    #[test]
    fn tail_limits_and_errors() {
        let b = ucb1_tail_bound(100, 0.5 - 1e-12).unwrap();
        assert_relative_eq!(b.exponent, 3.0, epsilon = 1e-4);
        assert!(ucb1_tail_bound(100, 0.5).is_err());
        assert!(ucb1_tail_bound(100, 0.0).is_err());
        assert!(generic_ucb_tail_bound(100, 0.4, 0.5).is_err());
    }

    #[test]
    fn generic_rho_three() {
        let b = generic_ucb_tail_bound(10_000, 0.45, 3.0).unwrap();
        assert_relative_eq!(b.value, 9.257_792_507_310_825e-9, epsilon = 1e-18);
    }

    #[test]
    fn tail_lightens_with_rho() {
        let n = 10_000;
        for eps in [0.40, 0.45, 0.48] {
            let mut prev = f64::INFINITY;
            for k in 0..40 {
                let rho = 2.0 + 0.25 * k as f64;
                let b = generic_ucb_tail_bound(n, eps, rho).unwrap();
                assert!(b.value < prev, "eps {eps} rho {rho}");
                prev = b.value;
            }
        }
    }

    proptest! {
        #[test]
        fn rho_two_is_ucb1(n in 1u64..10_000_000, eps in 0.001f64..0.499) {
            let a = ucb1_tail_bound(n, eps).unwrap();
            let b = generic_ucb_tail_bound(n, eps, 2.0).unwrap();
            prop_assert!((a.exponent - b.exponent).abs() < 1e-12);
            prop_assert!((a.value - b.value).abs() <= 1e-12 * a.value.max(1.0));
            prop_assert_eq!(a.vacuous, b.vacuous);
        }
    }
}
