//! Nonnegative least-squares style active-set solver for
//! `min 1/2 c' Sigma c - f' c` subject to `c >= 0`.
//!
//! The minimiser maximises `f'c / sqrt(c' Sigma c)` over nonnegative `c`
//! (the ratio is scale invariant and at the optimum `f'c = c' Sigma c`).

use alloc::vec;
use alloc::vec::Vec;

use crate::covariance::LayerCovariance;
use crate::error::{Error, Result};
use crate::poset::Caps;
use crate::scalar::Scalar;

use super::{combination_moments, sparse, EstimatorResult, Mode};

/// Optimality record of a convex solve, with `g = Sigma c - f`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktCertificate {
    pub support_size: usize,
    /// `max |g_i|` over the support, relative to `max |f|`.
    pub stationarity_residual: f64,
    /// `min g_i` off the support, relative to `max |f|`; `+inf` if the
    /// support is everything.
    pub min_dual: f64,
    /// Conditions were checked in exact arithmetic.
    pub exact: bool,
    pub iterations: usize,
}

impl KktCertificate {
    pub fn holds(&self, tol: f64) -> bool {
        if self.exact {
            self.stationarity_residual == 0.0 && self.min_dual >= 0.0
        } else {
            self.stationarity_residual <= tol && self.min_dual >= -tol
        }
    }
}

const PRIMAL_TOL: f64 = 1e-13;
const DUAL_TOL: f64 = 1e-12;

/// Best estimator with nonnegative coefficients. In exact arithmetic the
/// active set found in double precision is refined and certified exactly.
pub fn optimal_convex<S: Scalar>(lc: &LayerCovariance<S>, caps: &Caps) -> Result<EstimatorResult<S>> {
    if lc.f.iter().any(|x| !x.exceeds(0.0)) {
        return Err(Error::Precondition("root covariances must be positive".into()));
    }
    let n = lc.n();
    let (c, iterations) = if S::EXACT {
        let lf = lc.to_f64();
        let (cf, it_f) = active_set(&lf.sigma, &lf.f, n, &initial_support(n), caps.max_iterations)?;
        let guess: Vec<bool> = cf.iter().map(|x| *x > 0.0).collect();
        let (c, it) = active_set(&lc.sigma, &lc.f, n, &guess, caps.max_iterations)?;
        (c, it_f + it)
    } else {
        active_set(&lc.sigma, &lc.f, n, &initial_support(n), caps.max_iterations)?
    };
    let certificate = certify(lc, &c, iterations);
    let (cov, var) = combination_moments(lc, &c);
    Ok(EstimatorResult {
        mode: Mode::Convex,
        t: lc.t,
        coefficients: sparse(&lc.vertices, &c),
        ratio_sq: cov.clone() * cov / var,
        certificate: Some(certificate),
    })
}

fn initial_support(n: usize) -> Vec<bool> {
    vec![true; n]
}

fn solve_on<S: Scalar>(sigma: &[S], f: &[S], n: usize, support: &[usize]) -> Result<Vec<S>> {
    let k = support.len();
    let mut a = Vec::with_capacity(k * k);
    for &i in support {
        for &j in support {
            a.push(sigma[i * n + j].clone());
        }
    }
    let b: Vec<S> = support.iter().map(|&i| f[i].clone()).collect();
    S::solve_spd(&a, &b, k)
}

fn scale<S: Scalar>(f: &[S]) -> f64 {
    f.iter().map(|x| libm::fabs(x.to_float())).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
}

fn ratio_of<S: Scalar>(sigma: &[S], f: &[S], n: usize, c: &[S]) -> f64 {
    let mut cov = 0.0;
    let mut var = 0.0;
    for i in 0..n {
        let ci = c[i].to_float();
        if ci == 0.0 {
            continue;
        }
        cov += f[i].to_float() * ci;
        for j in 0..n {
            var += ci * sigma[i * n + j].to_float() * c[j].to_float();
        }
    }
    if var > 0.0 {
        cov / libm::sqrt(var)
    } else {
        0.0
    }
}

/// Returns the minimiser and the number of outer iterations. `start` marks
/// a guess for the support; negative components of the restricted solution
/// are dropped until it is strictly positive, then Lawson-Hanson steps run
/// to optimality. Entering indices are chosen by largest dual value, ties
/// resolved towards the smallest index.
fn active_set<S: Scalar>(sigma: &[S], f: &[S], n: usize, start: &[bool], max_iter: usize) -> Result<(Vec<S>, usize)> {
    let fscale = scale(f);
    let mut support: Vec<usize> = (0..n).filter(|&i| start[i]).collect();
    let mut c = vec![S::zero(); n];
    let mut iterations = 0usize;
    let budget = |iterations: usize, c: &[S]| -> Result<()> {
        if iterations > max_iter {
            Err(Error::NonConvergence { iterations, best_ratio: ratio_of(sigma, f, n, c) })
        } else {
            Ok(())
        }
    };

    while !support.is_empty() {
        iterations += 1;
        budget(iterations, &c)?;
        let z = solve_on(sigma, f, n, &support)?;
        let zmax = z.iter().map(|x| x.to_float()).fold(0.0, f64::max);
        let tol = PRIMAL_TOL * zmax;
        if z.iter().all(|x| x.exceeds(tol)) {
            for (k, &i) in support.iter().enumerate() {
                c[i] = z[k].clone();
            }
            break;
        }
        support = support.iter().zip(&z).filter(|(_, x)| x.exceeds(tol)).map(|(&i, _)| i).collect();
    }

    let mut excluded = vec![false; n];
    loop {
        iterations += 1;
        budget(iterations, &c)?;
        // Dual w = f - Sigma c; look for the most violated constraint.
        let mut in_support = vec![false; n];
        for &i in &support {
            in_support[i] = true;
        }
        let mut best: Option<(usize, S)> = None;
        for j in 0..n {
            if in_support[j] || excluded[j] {
                continue;
            }
            let mut w = f[j].clone();
            for &i in &support {
                w = w - sigma[j * n + i].clone() * c[i].clone();
            }
            if !w.exceeds(DUAL_TOL * fscale) {
                continue;
            }
            if best.as_ref().map_or(true, |(_, b)| w > *b) {
                best = Some((j, w));
            }
        }
        let entering = match best {
            Some((j, _)) => j,
            None => return Ok((c, iterations)),
        };
        let pos = support.partition_point(|&i| i < entering);
        support.insert(pos, entering);

        let mut first = true;
        loop {
            iterations += 1;
            budget(iterations, &c)?;
            let z = solve_on(sigma, f, n, &support)?;
            let zmax = z.iter().map(|x| x.to_float()).fold(0.0, f64::max);
            let tol = PRIMAL_TOL * zmax;
            if z.iter().all(|x| x.exceeds(tol)) {
                for (k, &i) in support.iter().enumerate() {
                    c[i] = z[k].clone();
                }
                break;
            }
            let entering_pos = support.iter().position(|&i| i == entering);
            if first && entering_pos.is_some_and(|p| !z[p].exceeds(tol)) {
                // Rounding made the entering direction look useless; drop it.
                support.retain(|&i| i != entering);
                excluded[entering] = true;
                break;
            }
            first = false;
            // Step from c towards z until the first coordinate reaches zero.
            let mut step: Option<S> = None;
            for (k, &i) in support.iter().enumerate() {
                if !z[k].exceeds(tol) {
                    let s = c[i].clone() / (c[i].clone() - z[k].clone());
                    if step.as_ref().map_or(true, |b| s < *b) {
                        step = Some(s);
                    }
                }
            }
            let step = step.expect("some coordinate is nonpositive");
            for (k, &i) in support.iter().enumerate() {
                c[i] = c[i].clone() + step.clone() * (z[k].clone() - c[i].clone());
            }
            let cmax = support.iter().map(|&i| c[i].to_float()).fold(0.0, f64::max);
            let ctol = PRIMAL_TOL * cmax;
            let (keep, drop): (Vec<usize>, Vec<usize>) = support.iter().partition(|&&i| c[i].exceeds(ctol));
            for i in drop {
                c[i] = S::zero();
            }
            support = keep;
        }
    }
}

fn certify<S: Scalar>(lc: &LayerCovariance<S>, c: &[S], iterations: usize) -> KktCertificate {
    let n = lc.n();
    let fscale = scale(&lc.f);
    let mut stationarity = 0.0f64;
    let mut min_dual = f64::INFINITY;
    let mut exact_ok = true;
    let mut support_size = 0;
    for i in 0..n {
        let mut g = -lc.f[i].clone();
        for j in 0..n {
            if !c[j].is_zero() {
                g = g + lc.sigma[i * n + j].clone() * c[j].clone();
            }
        }
        let gf = g.to_float() / fscale;
        if !c[i].is_zero() {
            support_size += 1;
            stationarity = stationarity.max(libm::fabs(gf));
            if S::EXACT && !g.is_zero() {
                exact_ok = false;
            }
        } else {
            min_dual = min_dual.min(gf);
            if S::EXACT && g < S::zero() {
                exact_ok = false;
            }
        }
    }
    if S::EXACT && exact_ok {
        // Exactly verified: report exact zeros.
        stationarity = 0.0;
        min_dual = min_dual.max(0.0);
    }
    KktCertificate {
        support_size,
        stationarity_residual: stationarity,
        min_dual,
        exact: S::EXACT && exact_ok,
        iterations,
    }
}
