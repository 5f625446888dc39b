//! Binomial and multinomial coefficients, abelian-square counts `F(m, i)`
//! and the bounds and recurrences they satisfy.
//!
//! `F(m, i)` is the sum of squared multinomial coefficients over all
//! compositions of `m` into `i` nonnegative parts, i.e. the number of words
//! of length `2m` over an `i`-letter alphabet whose two halves are
//! anagrams of each other.

mod bipoly;
mod float;

pub use bipoly::BivariatePoly;
pub use float::{normalized_abelian_squares, normalized_central_binomials};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::ln_bigint;

/// `C(n, k)`, zero when `k < 0` or `k > n` or `n < 0`.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if n < 0 || k < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `m! / prod(v_i!)` when every `v_i >= 0` and `sum(v) = m`, otherwise 0.
pub fn multinomial(m: i64, v: &[i64]) -> BigInt {
    if v.iter().any(|&x| x < 0) || v.iter().sum::<i64>() != m {
        return BigInt::zero();
    }
    let mut rest = m;
    let mut acc = BigInt::one();
    for &x in v {
        acc *= binomial(rest, x);
        rest -= x;
    }
    acc
}

/// Row `n` of Pascal's triangle.
pub fn binomial_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(BigInt::one());
        for w in row.windows(2) {
            next.push(&w[0] + &w[1]);
        }
        next.push(BigInt::one());
        row = next;
    }
    row
}

/// `F(m, i)` for a single `m`.
pub fn abelian_square_count(m: usize, i: usize) -> Result<BigInt> {
    Ok(abelian_square_table(m, i)?.pop().expect("table is nonempty"))
}

/// `F(0, i), ..., F(m_max, i)` by iterated convolution
/// `F(m, i) = sum_j C(m, j)^2 F(j, i - 1)`, starting from `F(m, 1) = 1`.
pub fn abelian_square_table(m_max: usize, i: usize) -> Result<Vec<BigInt>> {
    if i == 0 {
        return Err(Error::Domain("alphabet size must be at least 1".into()));
    }
    let mut level: Vec<BigInt> = vec![BigInt::one(); m_max + 1];
    for _ in 1..i {
        level = convolve_level(&level);
    }
    Ok(level)
}

fn convolve_level(prev: &[BigInt]) -> Vec<BigInt> {
    let m_max = prev.len() - 1;
    let mut out = Vec::with_capacity(m_max + 1);
    let mut row = vec![BigInt::one()];
    for m in 0..=m_max {
        if m > 0 {
            let mut next = Vec::with_capacity(m + 1);
            next.push(BigInt::one());
            for w in row.windows(2) {
                next.push(&w[0] + &w[1]);
            }
            next.push(BigInt::one());
            row = next;
        }
        let mut acc = BigInt::zero();
        // Pair j with m - j: both share C(m, j).
        for j in 0..=m / 2 {
            let c2 = &row[j] * &row[j];
            if 2 * j == m {
                acc += c2 * &prev[j];
            } else {
                acc += c2 * (&prev[j] + &prev[m - j]);
            }
        }
        out.push(acc);
    }
    out
}

/// `F(0, 3), ..., F(m_max, 3)` from the holonomic recurrence
/// `(m+2)^2 F(m+2) = (10m^2 + 30m + 23) F(m+1) - 9 (m+1)^2 F(m)`
/// seeded with `F(0, 3) = 1` and `F(1, 3) = 3`.
pub fn f3_by_recurrence(m_max: usize) -> Result<Vec<BigInt>> {
    let mut f = vec![BigInt::one(), BigInt::from(3)];
    for m in 0..m_max.saturating_sub(1) {
        let mi = m as i64;
        let rhs = BigInt::from(10 * mi * mi + 30 * mi + 23) * &f[m + 1] - BigInt::from(9 * (mi + 1) * (mi + 1)) * &f[m];
        let den = BigInt::from((mi + 2) * (mi + 2));
        let (q, r) = rhs.div_rem(&den);
        if !r.is_zero() {
            return Err(Error::Internal(format!("recurrence step m = {m} is not integral")));
        }
        f.push(q);
    }
    f.truncate(m_max + 1);
    Ok(f)
}

/// Rational bounds `lo < pi < hi` with `hi - lo < 2^-bits`, from Machin's
/// formula `pi = 16 atan(1/5) - 4 atan(1/239)` and alternating-series
/// truncation.
pub fn pi_bounds(bits: u32) -> (BigRational, BigRational) {
    let (lo5, hi5) = atan_inv_bounds(5, bits + 8);
    let (lo239, hi239) = atan_inv_bounds(239, bits + 8);
    let sixteen = BigRational::from_integer(16.into());
    let four = BigRational::from_integer(4.into());
    (&sixteen * &lo5 - &four * &hi239, &sixteen * &hi5 - &four * &lo239)
}

fn atan_inv_bounds(x: i64, bits: u32) -> (BigRational, BigRational) {
    let eps = BigRational::new(BigInt::one(), BigInt::one() << bits as usize);
    let x2 = BigInt::from(x * x);
    let mut pow = BigInt::from(x);
    let mut sum = BigRational::zero();
    let mut k: i64 = 0;
    loop {
        let term = BigRational::new(BigInt::one(), &pow * (2 * k + 1));
        let next = if k % 2 == 0 { &sum + &term } else { &sum - &term };
        if term < eps {
            // Consecutive partial sums bracket the limit.
            return if k % 2 == 0 { (sum, next) } else { (next, sum) };
        }
        sum = next;
        pow *= &x2;
        k += 1;
    }
}

/// Outcome of checking `9^m / (3m) <= F(m, 3) <= sqrt(27)/(4 pi) * 9^m / m`
/// and the monotonicity of `a_m = m 9^{-m} F(m, 3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbelianBoundsReport {
    pub m_max: usize,
    pub lower_failures: Vec<usize>,
    pub upper_failures: Vec<usize>,
    /// Values of `m` where the upper comparison could not be decided with
    /// the rational enclosure of pi.
    pub upper_undecided: Vec<usize>,
    pub monotone_failures: Vec<usize>,
    /// Range of `3m F(m,3) / 9^m` (at least 1 when the lower bound holds).
    pub lower_ratio_range: (f64, f64),
    /// Range of `F(m,3) / (sqrt(27)/(4 pi) 9^m / m)` (at most 1 when the
    /// upper bound holds).
    pub upper_ratio_range: (f64, f64),
}

impl AbelianBoundsReport {
    pub fn passed(&self) -> bool {
        self.lower_failures.is_empty()
            && self.upper_failures.is_empty()
            && self.upper_undecided.is_empty()
            && self.monotone_failures.is_empty()
    }
}

/// Checks the two-sided bound on `F(m, 3)` exactly for `1 <= m <= m_max`,
/// using the values in `f3` (indexed from 0).
pub fn check_f3_bounds(f3: &[BigInt]) -> AbelianBoundsReport {
    let m_max = f3.len().saturating_sub(1);
    let (pi_lo, pi_hi) = pi_bounds(64);
    let pi_lo_sq = &pi_lo * &pi_lo;
    let pi_hi_sq = &pi_hi * &pi_hi;
    let mut report = AbelianBoundsReport {
        m_max,
        lower_failures: Vec::new(),
        upper_failures: Vec::new(),
        upper_undecided: Vec::new(),
        monotone_failures: Vec::new(),
        lower_ratio_range: (f64::INFINITY, f64::NEG_INFINITY),
        upper_ratio_range: (f64::INFINITY, f64::NEG_INFINITY),
    };
    let ln9 = libm::log(9.0);
    let upper_const = libm::sqrt(27.0) / (4.0 * core::f64::consts::PI);
    let mut nine_m = BigInt::one();
    for m in 0..=m_max {
        if m > 0 {
            nine_m *= 9;
            let f = &f3[m];
            let mb = BigInt::from(m);
            if nine_m > BigInt::from(3) * &mb * f {
                report.lower_failures.push(m);
            }
            // 16 pi^2 m^2 F^2 <= 27 * 81^m
            let lhs = BigRational::from_integer(BigInt::from(16) * &mb * &mb * f * f);
            let rhs = BigRational::from_integer(BigInt::from(27) * &nine_m * &nine_m);
            if &lhs * &pi_hi_sq <= rhs {
            } else if &lhs * &pi_lo_sq > rhs {
                report.upper_failures.push(m);
            } else {
                report.upper_undecided.push(m);
            }
            let ln_ratio = ln_bigint(f) + libm::log(m as f64) - m as f64 * ln9;
            let lower = libm::exp(ln_ratio + libm::log(3.0));
            let upper = libm::exp(ln_ratio) / upper_const;
            report.lower_ratio_range = (report.lower_ratio_range.0.min(lower), report.lower_ratio_range.1.max(lower));
            report.upper_ratio_range = (report.upper_ratio_range.0.min(upper), report.upper_ratio_range.1.max(upper));
        }
        if m < m_max {
            // a_{m+1} > a_m  <=>  (m+1) F(m+1) > 9 m F(m)
            let left = BigInt::from(m + 1) * &f3[m + 1];
            let right = BigInt::from(9 * m) * &f3[m];
            if left <= right {
                report.monotone_failures.push(m);
            }
        }
    }
    report
}

/// `F(m, i) (4 pi m)^{(i-1)/2} / i^{2m + i/2}`, which tends to 1.
pub fn asymptotic_ratio(f: &BigInt, m: usize, i: usize) -> f64 {
    let m_f = m as f64;
    let i_f = i as f64;
    let ln = ln_bigint(f) + 0.5 * (i_f - 1.0) * libm::log(4.0 * core::f64::consts::PI * m_f)
        - (2.0 * m_f + 0.5 * i_f) * libm::log(i_f);
    libm::exp(ln)
}

/// Values of `n <= n_max` at which `F(n, i) <= i^{2n+i} / n^{(i-1)/2}`
/// fails, evaluated in log space from the normalized float table. The
/// bound is only claimed for astronomically large `n`, so callers record
/// the result rather than assert it.
pub fn general_bound_failures(n_max: usize, i: usize) -> Vec<usize> {
    let g = normalized_abelian_squares(i, n_max);
    let ln_i = libm::log(i as f64);
    (1..=n_max)
        .filter(|&n| {
            // ln F = 2n ln i + ln G
            let lhs = libm::log(g[n]) + 0.5 * (i as f64 - 1.0) * libm::log(n as f64);
            lhs > i as f64 * ln_i
        })
        .collect()
}

/// `sum_w C(k, w) C(k, w + delta)` over compositions `w` of `k` into `d + 1`
/// parts, for `d <= 2`. `delta` must have coordinate sum 0.
pub fn shifted_autocorrelation(k: i64, delta: &[i64]) -> Result<BigInt> {
    match delta.len() {
        1 => Ok(if delta[0] == 0 { BigInt::one() } else { BigInt::zero() }),
        2 => Ok(binomial(2 * k, k + delta[0])),
        3 => {
            let (d1, d3) = (delta[0], delta[2]);
            let mut acc = BigInt::zero();
            for j in 0..=k {
                let a = binomial(k, j);
                let b = binomial(k, j + d3);
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                acc += a * b * binomial(2 * k - 2 * j - d3, k - j - d3 - d1);
            }
            Ok(acc)
        }
        n => Err(Error::Unsupported(format!("shifted autocorrelation is implemented for dimension <= 3, got {n}"))),
    }
}

/// Integer-free float version of [`shifted_autocorrelation`] divided by
/// `(d+1)^{2k}`, for large `k`.
pub fn shifted_autocorrelation_normalized(k: i64, delta: &[i64]) -> Result<f64> {
    let ln_binom = |n: i64, r: i64| -> Option<f64> {
        if n < 0 || r < 0 || r > n {
            None
        } else {
            Some(libm::lgamma(n as f64 + 1.0) - libm::lgamma(r as f64 + 1.0) - libm::lgamma((n - r) as f64 + 1.0))
        }
    };
    match delta.len() {
        1 => Ok(if delta[0] == 0 { 1.0 } else { 0.0 }),
        2 => Ok(ln_binom(2 * k, k + delta[0]).map_or(0.0, |l| libm::exp(l - 2.0 * k as f64 * libm::log(2.0)))),
        3 => {
            let (d1, d3) = (delta[0], delta[2]);
            let norm = 2.0 * k as f64 * libm::log(3.0);
            let mut acc = 0.0;
            for j in 0..=k {
                if let (Some(a), Some(b), Some(c)) =
                    (ln_binom(k, j), ln_binom(k, j + d3), ln_binom(2 * k - 2 * j - d3, k - j - d3 - d1))
                {
                    acc += libm::exp(a + b + c - norm);
                }
            }
            Ok(acc)
        }
        n => Err(Error::Unsupported(format!("shifted autocorrelation is implemented for dimension <= 3, got {n}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(2, &[2, 0, 0]), BigInt::from(1));
        assert_eq!(multinomial(2, &[1, 1, 0]), BigInt::from(2));
        assert_eq!(multinomial(5, &[2, -1, 4]), BigInt::zero());
        assert_eq!(multinomial(3, &[1, 1]), BigInt::zero());
    }

    #[test]
    fn abelian_square_small_values() {
        assert_eq!(abelian_square_count(2, 3).unwrap(), BigInt::from(15));
        assert_eq!(abelian_square_count(3, 2).unwrap(), BigInt::from(20));
        assert_eq!(abelian_square_count(7, 1).unwrap(), BigInt::from(1));
        assert_eq!(abelian_square_count(0, 3).unwrap(), BigInt::from(1));
        assert!(abelian_square_count(3, 0).is_err());
    }

    #[test]
    fn recurrence_matches_convolution() {
        let rec = f3_by_recurrence(60).unwrap();
        assert_eq!(rec[3], BigInt::from(93));
        assert_eq!(rec, abelian_square_table(60, 3).unwrap());
    }

    #[test]
    fn pi_is_bracketed() {
        let (lo, hi) = pi_bounds(64);
        let pi = core::f64::consts::PI;
        assert!(crate::scalar::rational_to_f64(&lo) <= pi);
        assert!(crate::scalar::rational_to_f64(&hi) >= pi);
        assert!(&hi - &lo < BigRational::new(1.into(), BigInt::one() << 64usize));
    }

    #[test]
    fn shifted_sums_match_direct_enumeration() {
        for k in 0..6i64 {
            for delta in [[0i64, 0, 0], [1, -1, 0], [2, 0, -2], [1, 1, -2], [-3, 1, 2]] {
                let mut direct = BigInt::zero();
                for a in 0..=k {
                    for b in 0..=(k - a) {
                        let w = [a, b, k - a - b];
                        let s: Vec<i64> = w.iter().zip(&delta).map(|(x, y)| x + y).collect();
                        direct += multinomial(k, &w) * multinomial(k, &s);
                    }
                }
                assert_eq!(shifted_autocorrelation(k, &delta).unwrap(), direct, "k={k} delta={delta:?}");
                let approx = shifted_autocorrelation_normalized(k, &delta).unwrap();
                let exact = crate::scalar::rational_to_f64(&BigRational::new(
                    direct,
                    num_traits::pow(BigInt::from(9), k as usize),
                ));
                assert!((approx - exact).abs() <= 1e-12 * exact.max(1e-300));
            }
        }
    }
}
