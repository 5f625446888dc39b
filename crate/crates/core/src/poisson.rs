//! Exact checks of two Poisson tail bounds: for `Z ~ Poisson(T)` with a
//! positive integer `T`, `P(Z >= T) >= 1/2` and
//! `P(Z <= T - sqrt(T)) >= e^{-9}`.
//!
//! Multiplying through by `e^T` turns both into comparisons between finite
//! partial sums of the exponential series and rational enclosures of a
//! power of `e`.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::scalar::rational_to_f64;

/// `sum_{k=0}^{n} x^k / k!`.
fn exp_partial(x: &BigRational, n: u64) -> BigRational {
    let mut term = BigRational::one();
    let mut acc = BigRational::one();
    for k in 1..=n {
        term = term * x / BigRational::from_integer(BigInt::from(k));
        acc += &term;
    }
    acc
}

/// Rational `lo <= e^x <= hi` for `x >= 0`.
pub fn exp_bounds(x: &BigRational) -> (BigRational, BigRational) {
    let xf = rational_to_f64(x);
    let n = (2.0 * xf) as u64 + 60;
    let mut term = BigRational::one();
    let mut acc = BigRational::one();
    for k in 1..=n {
        term = term * x / BigRational::from_integer(BigInt::from(k));
        acc += &term;
    }
    // Remainder after the x^n/n! term is at most
    // x^{n+1}/(n+1)! * 1 / (1 - x/(n+2)).
    let next = &term * x / BigRational::from_integer(BigInt::from(n + 1));
    let n2 = BigRational::from_integer(BigInt::from(n + 2));
    let tail = next * &n2 / (&n2 - x);
    (acc.clone(), acc + tail)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonCheck {
    pub t: u64,
    /// `P(Z >= T)`, rounded from the exact enclosure.
    pub upper_tail: f64,
    /// `P(Z <= T - sqrt(T))`, rounded.
    pub lower_tail: f64,
    pub upper_tail_ok: bool,
    pub lower_tail_ok: bool,
}

/// Runs both checks for `T = 1..=t_max`.
pub fn poisson_tail_checks(t_max: u64) -> Vec<PoissonCheck> {
    (1..=t_max).map(check_one).collect()
}

fn check_one(t: u64) -> PoissonCheck {
    let x = BigRational::from_integer(BigInt::from(t));
    let (e_lo, _) = exp_bounds(&x);
    let below = exp_partial(&x, t - 1);
    // P(Z >= T) >= 1/2  <=>  2 sum_{k<T} T^k/k! <= e^T
    let two = BigRational::from_integer(2.into());
    let upper_tail_ok = &two * &below <= e_lo;

    let s = ceil_sqrt(t);
    let lower_tail_ok;
    let mut partial = BigRational::zero();
    if t >= s {
        partial = exp_partial(&x, t - s);
    }
    if t < s {
        lower_tail_ok = false;
    } else if t >= 9 {
        // sum_{k <= T - ceil(sqrt T)} T^k/k! >= e^{T-9}
        let (_, hi) = exp_bounds(&BigRational::from_integer(BigInt::from(t - 9)));
        lower_tail_ok = partial >= hi;
    } else {
        // e^{T-9} = 1 / e^{9-T} <= 1 / lo
        let (lo, _) = exp_bounds(&BigRational::from_integer(BigInt::from(9 - t)));
        lower_tail_ok = &partial * &lo >= BigRational::one();
    }
    let ef = rational_to_f64(&e_lo);
    let (upper_tail, lower_tail) = if ef.is_finite() {
        (1.0 - rational_to_f64(&below) / ef, rational_to_f64(&partial) / ef)
    } else {
        (1.0 - rational_to_f64(&(&below / &e_lo)), rational_to_f64(&(&partial / &e_lo)))
    };
    PoissonCheck { t, upper_tail, lower_tail, upper_tail_ok, lower_tail_ok }
}

fn ceil_sqrt(t: u64) -> u64 {
    let s = t.sqrt();
    if s * s == t {
        s
    } else {
        s + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_values() {
        let c = &poisson_tail_checks(1)[0];
        assert!((c.upper_tail - (1.0 - libm::exp(-1.0))).abs() < 1e-12);
        assert!((c.lower_tail - libm::exp(-1.0)).abs() < 1e-12);
        assert!(c.upper_tail_ok && c.lower_tail_ok);
    }

    #[test]
    fn e_is_enclosed() {
        let (lo, hi) = exp_bounds(&BigRational::one());
        assert!(rational_to_f64(&lo) <= core::f64::consts::E);
        assert!(rational_to_f64(&hi) >= core::f64::consts::E);
    }
}
