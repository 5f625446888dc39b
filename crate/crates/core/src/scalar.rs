//! Scalar backends: exact rationals and `f64`.
//!
//! Every numerical routine in the crate is generic over [`Scalar`], so the
//! same dynamic program or solver runs either in exact arithmetic or in
//! double precision.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::Neg;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub trait Scalar: Clone + Debug + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static {
    /// True for exact arithmetic backends.
    const EXACT: bool;

    fn from_rational(r: &BigRational) -> Self;

    fn from_int(v: i64) -> Self;

    /// Exact for rationals (every finite double is a dyadic rational).
    fn from_f64(x: f64) -> Self;

    fn to_float(&self) -> f64;

    /// `self > tol` for floating backends, `self > 0` for exact ones.
    fn exceeds(&self, tol: f64) -> bool;

    /// Solves `a x = b` for a symmetric positive definite row-major `n x n`
    /// matrix. Fails if a non-positive pivot shows up.
    fn solve_spd(a: &[Self], b: &[Self], n: usize) -> Result<Vec<Self>>;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r)
    }

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_float(&self) -> f64 {
        *self
    }

    fn exceeds(&self, tol: f64) -> bool {
        *self > tol
    }

    fn solve_spd(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
        let l = cholesky(a, n)?;
        Ok(cholesky_solve(&l, b, n))
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(BigRational::zero)
    }

    fn to_float(&self) -> f64 {
        rational_to_f64(self)
    }

    fn exceeds(&self, _tol: f64) -> bool {
        self.is_positive()
    }

    fn solve_spd(a: &[BigRational], b: &[BigRational], n: usize) -> Result<Vec<BigRational>> {
        bareiss_solve(a, b, n)
    }
}

/// Conversion that survives numerators and denominators far outside the
/// `f64` range as long as the quotient itself is representable.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    let (mn, en) = bigint_to_mantissa_exp(r.numer());
    let (md, ed) = bigint_to_mantissa_exp(r.denom());
    libm::ldexp(mn / md, (en - ed) as i32)
}

/// Returns `(m, e)` with `x ~= m * 2^e` and `|m| < 2^53`.
pub fn bigint_to_mantissa_exp(x: &BigInt) -> (f64, i64) {
    let bits = x.bits() as i64;
    if bits <= 53 {
        return (x.to_f64().unwrap_or(0.0), 0);
    }
    let shift = bits - 53;
    let top: BigInt = x >> (shift as usize);
    (top.to_f64().unwrap_or(0.0), shift)
}

/// Natural logarithm of a positive big integer.
pub fn ln_bigint(x: &BigInt) -> f64 {
    let (m, e) = bigint_to_mantissa_exp(x);
    libm::log(m) + (e as f64) * core::f64::consts::LN_2
}

/// Builds `p/q`. Panics if `q == 0`.
pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(p))
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.35"` into an
/// exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Usage(alloc::format!("cannot parse rational from {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.trim_start().starts_with('-');
        let whole_abs = whole.trim_start_matches(['-', '+']);
        let whole_int: BigInt =
            if whole_abs.is_empty() { BigInt::zero() } else { whole_abs.parse().map_err(|_| bad())? };
        let frac_int: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10u32), frac.len());
        let mut value = BigRational::new(whole_int * &scale + frac_int, scale);
        if negative {
            value = -value;
        }
        return Ok(value);
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(p))
}

/// Renders as `p/q`, or `p` for integers.
pub fn format_rational(r: &BigRational) -> alloc::string::String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        alloc::format!("{}/{}", r.numer(), r.denom())
    }
}

fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if !(diag > 0.0) {
            return Err(Error::Domain(alloc::format!("matrix is not positive definite (pivot {j} = {diag:e})")));
        }
        let ljj = libm::sqrt(diag);
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            for k in 0..j {
                s -= ri[k] * rj[k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

/// Fraction-free elimination on the integer matrix obtained by clearing
/// denominators. Leading principal minors appear as pivots, so positive
/// definiteness is checked along the way.
fn bareiss_solve(a: &[BigRational], b: &[BigRational], n: usize) -> Result<Vec<BigRational>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut lcm = BigInt::one();
    for v in a.iter().chain(b.iter()) {
        lcm = lcm.lcm(v.denom());
    }
    let w = n + 1;
    let mut m: Vec<BigInt> = Vec::with_capacity(n * w);
    for i in 0..n {
        for j in 0..n {
            let v = &a[i * n + j];
            m.push(v.numer() * (&lcm / v.denom()));
        }
        let v = &b[i];
        m.push(v.numer() * (&lcm / v.denom()));
    }
    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot = m[k * w + k].clone();
        if !pivot.is_positive() {
            return Err(Error::Domain(alloc::format!(
                "matrix is not positive definite (leading minor {} is {})",
                k + 1,
                if pivot.is_zero() { "zero" } else { "negative" }
            )));
        }
        for i in (k + 1)..n {
            let factor = m[i * w + k].clone();
            for j in (k + 1)..w {
                let v = (&pivot * &m[i * w + j] - &factor * &m[k * w + j]) / &prev;
                m[i * w + j] = v;
            }
            m[i * w + k] = BigInt::zero();
        }
        prev = pivot;
    }
    let mut x: Vec<BigRational> = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        let mut s = BigRational::from_integer(m[i * w + n].clone());
        for j in (i + 1)..n {
            if !m[i * w + j].is_zero() {
                s -= BigRational::from_integer(m[i * w + j].clone()) * &x[j];
            }
        }
        x[i] = s / BigRational::from_integer(m[i * w + i].clone());
    }
    Ok(x)
}
