//! Optimal linear estimators of the root value from one layer.

mod convex;
mod supercritical;

pub use convex::{optimal_convex, KktCertificate};
pub use supercritical::{kappa, supercritical_certificate, SupercriticalCertificate};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::combinatorics::{binomial, binomial_row, normalized_central_binomials};
use crate::covariance::{
    halfspace_growth, halfspace_pair_covariance, halfspace_root_covariance, halfspace_vertex_variance,
    halfspace_vertex_variances, HalfSpaceFloat, LayerCovariance,
};
use crate::error::{Error, Result};
use crate::poset::{layer_vertices, Caps, ModelKind, ModelSpec, Vertex, Window};
use crate::scalar::{rational_to_f64, Scalar};

/// Which linear combinations of a layer are admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Unrestricted,
    /// Nonnegative coefficients.
    Convex,
    /// Support inside a window of the given width.
    Window(u64),
    SingleVertex,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Unrestricted => f.write_str("unrestricted"),
            Mode::Convex => f.write_str("convex"),
            Mode::Window(n) => write!(f, "window-{n}"),
            Mode::SingleVertex => f.write_str("single-vertex"),
        }
    }
}

/// An estimator `zeta = sum_u c_u X_u` and its quality.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult<S> {
    pub mode: Mode,
    pub t: u64,
    /// Nonzero coefficients in vertex order. Any positive multiple is an
    /// equally good estimator.
    pub coefficients: Vec<(Vertex, S)>,
    /// `Cov(zeta, X_0)^2 / Var(zeta)`.
    pub ratio_sq: S,
    pub certificate: Option<KktCertificate>,
}

impl<S: Scalar> EstimatorResult<S> {
    /// `Cov(zeta, X_0) / sqrt(Var(zeta))`.
    pub fn ratio(&self) -> f64 {
        libm::sqrt(self.ratio_sq.to_float())
    }

    /// `Corr(zeta, X_0)`, i.e. the ratio divided by `sigma0`.
    pub fn correlation(&self, model: &ModelSpec) -> f64 {
        self.ratio() / libm::sqrt(rational_to_f64(model.sigma0_sq()))
    }
}

/// `(Cov(zeta, X_0), Var(zeta))` for dense coefficients on `lc`.
pub fn combination_moments<S: Scalar>(lc: &LayerCovariance<S>, c: &[S]) -> (S, S) {
    let n = lc.n();
    let mut cov = S::zero();
    let mut var = S::zero();
    for i in 0..n {
        if c[i].is_zero() {
            continue;
        }
        cov = cov + lc.f[i].clone() * c[i].clone();
        let mut row = S::zero();
        for j in 0..n {
            if !c[j].is_zero() {
                row = row + lc.sigma[i * n + j].clone() * c[j].clone();
            }
        }
        var = var + c[i].clone() * row;
    }
    (cov, var)
}

pub(crate) fn sparse<S: Scalar>(vertices: &[Vertex], c: &[S]) -> Vec<(Vertex, S)> {
    vertices.iter().zip(c).filter(|(_, x)| !x.is_zero()).map(|(v, x)| (v.clone(), x.clone())).collect()
}

/// The best linear estimator: `c = Sigma^{-1} f`, for which
/// `Cov(zeta, X_0) = Var(zeta) = f' Sigma^{-1} f`.
pub fn optimal_linear<S: Scalar>(lc: &LayerCovariance<S>) -> Result<EstimatorResult<S>> {
    let c = S::solve_spd(&lc.sigma, &lc.f, lc.n())
        .map_err(|e| Error::Internal(format!("layer covariance is not positive definite: {e}")))?;
    let mut ratio_sq = S::zero();
    for (fi, ci) in lc.f.iter().zip(&c) {
        ratio_sq = ratio_sq + fi.clone() * ci.clone();
    }
    Ok(EstimatorResult {
        mode: Mode::Unrestricted,
        t: lc.t,
        coefficients: sparse(&lc.vertices, &c),
        ratio_sq,
        certificate: None,
    })
}

/// Exact optimum for the critical orthant with `d = 1`:
/// `S_t^2 = 1 / (t 4^{-t} C(2t, t) + 1)`, attained by `c_i = C(t, i)` on
/// the vertex `(i, t - i)`.
pub fn closed_form_critical_d1(t: u64) -> (BigRational, Vec<BigInt>) {
    let four_t = num_traits::pow(BigInt::from(4), t as usize);
    let central = binomial(2 * t as i64, t as i64);
    let denom = BigRational::new(BigInt::from(t) * central + &four_t, four_t);
    (BigRational::from_integer(1.into()) / denom, binomial_row(t as usize))
}

/// Float values of the same closed form, `S_t` for `t = 0..=t_max`.
pub fn closed_form_critical_d1_f64(t_max: u64) -> Vec<f64> {
    normalized_central_binomials(t_max as usize)
        .iter()
        .enumerate()
        .map(|(t, g)| 1.0 / libm::sqrt(t as f64 * g + 1.0))
        .collect()
}

/// Exact `Cov(X_v, X_0)^2 / Var(X_v)` for a half-space vertex on layer `t`.
pub fn single_vertex_ratio_sq(m: &ModelSpec, t: u64) -> Result<BigRational> {
    let cov = halfspace_root_covariance(m, t)?;
    let var = halfspace_vertex_variance(m, t)?;
    Ok(&cov * &cov / var)
}

/// Exact `Cov(X_v, X_0)^2 / Var(X_v)` on half-space layers `0..=t_max`.
pub fn single_vertex_ratio_sq_series(m: &ModelSpec, t_max: u64) -> Result<Vec<BigRational>> {
    let vars = halfspace_vertex_variances(m, t_max)?;
    let beta_sq = halfspace_growth(m).pow(2);
    let s0 = m.sigma0_sq();
    let mut cov_sq = s0 * s0;
    let mut out = Vec::with_capacity(vars.len());
    for v in vars {
        out.push(&cov_sq / v);
        cov_sq *= &beta_sq;
    }
    Ok(out)
}

/// `Cov(X_v, X_0) / sqrt(Var(X_v))` on half-space layers `0..=t_max`.
pub fn single_vertex_ratios(m: &ModelSpec, t_max: u64) -> Result<Vec<f64>> {
    let hf = HalfSpaceFloat::new(m)?;
    let sigma0 = libm::sqrt(rational_to_f64(m.sigma0_sq()));
    Ok(hf.scaled_variances(t_max).into_iter().map(|s| sigma0 / libm::sqrt(s)).collect())
}

/// Covariance data of the window slice of half-space layer `t`, exact.
pub fn window_covariance(m: &ModelSpec, t: u64, w: &Window, caps: &Caps) -> Result<LayerCovariance<BigRational>> {
    let vertices = window_vertices(m, t, w, caps)?;
    let cov = halfspace_root_covariance(m, t)?;
    let mut cache: BTreeMap<Vec<i64>, BigRational> = BTreeMap::new();
    let sigma = pairwise(&vertices, |delta| match cache.get(&delta.0) {
        Some(v) => Ok(v.clone()),
        None => {
            let v = halfspace_pair_covariance(m, t, delta)?;
            cache.insert(delta.0.clone(), v.clone());
            Ok(v)
        }
    })?;
    let f = vertices.iter().map(|_| cov.clone()).collect();
    Ok(LayerCovariance { model: m.clone(), t, vertices, sigma, f })
}

/// Float covariance data of a window slice, divided by `sigma0 beta^t` per
/// variable (`beta = (d+1) alpha`) so that deep layers stay in range. The
/// optimal ratio is unaffected by this rescaling.
pub fn window_covariance_f64(m: &ModelSpec, t: u64, w: &Window, caps: &Caps) -> Result<LayerCovariance<f64>> {
    let vertices = window_vertices(m, t, w, caps)?;
    let hf = HalfSpaceFloat::new(m)?;
    let mut cache: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let sigma = pairwise(&vertices, |delta| match cache.get(&delta.0) {
        Some(v) => Ok(*v),
        None => {
            let v = hf.scaled_pair_covariance(t, delta)?;
            cache.insert(delta.0.clone(), v);
            Ok(v)
        }
    })?;
    let sigma0 = libm::sqrt(rational_to_f64(m.sigma0_sq()));
    let f = vertices.iter().map(|_| sigma0).collect();
    Ok(LayerCovariance { model: m.clone(), t, vertices, sigma, f })
}

fn window_vertices(m: &ModelSpec, t: u64, w: &Window, caps: &Caps) -> Result<Vec<Vertex>> {
    if m.kind() != ModelKind::HalfSpace {
        return Err(Error::Usage("window estimators are defined on the half-space model".into()));
    }
    let vertices = layer_vertices(m, t, Some(w))?;
    if vertices.is_empty() {
        return Err(Error::Domain(format!("window with base {} and width {} misses layer {t}", w.base, w.width)));
    }
    caps.check_layer(vertices.len() as u128)?;
    Ok(vertices)
}

fn pairwise<T: Clone>(vertices: &[Vertex], mut cov: impl FnMut(&Vertex) -> Result<T>) -> Result<Vec<T>> {
    let n = vertices.len();
    let mut out: Vec<Option<T>> = (0..n * n).map(|_| None).collect();
    for i in 0..n {
        for j in i..n {
            let delta = vertices[j].sub(&vertices[i]);
            // Cov(X_u, X_v) is symmetric, so delta and -delta share a value.
            let neg = Vertex(delta.0.iter().map(|x| -x).collect());
            let key = if neg < delta { neg } else { delta };
            let v = cov(&key)?;
            out[i * n + j] = Some(v.clone());
            out[j * n + i] = Some(v);
        }
    }
    Ok(out.into_iter().map(|x| x.expect("filled")).collect())
}

/// Best estimator supported on the window slice of half-space layer `t`.
pub fn window_optimal<S: Scalar>(m: &ModelSpec, t: u64, w: &Window, caps: &Caps) -> Result<EstimatorResult<S>> {
    let mut res = if S::EXACT {
        let lc = window_covariance(m, t, w, caps)?;
        let lc = LayerCovariance {
            model: lc.model,
            t,
            vertices: lc.vertices,
            sigma: lc.sigma.iter().map(S::from_rational).collect(),
            f: lc.f.iter().map(S::from_rational).collect(),
        };
        optimal_linear(&lc)?
    } else {
        let lc = window_covariance_f64(m, t, w, caps)?;
        let lc = LayerCovariance {
            model: lc.model,
            t,
            vertices: lc.vertices,
            sigma: lc.sigma.into_iter().map(S::from_f64).collect(),
            f: lc.f.into_iter().map(S::from_f64).collect(),
        };
        optimal_linear(&lc)?
    };
    res.mode = Mode::Window(w.width);
    Ok(res)
}

/// Summary of how settled a ratio sequence is over its final decade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSummary {
    /// Largest minus smallest value over `t in [T/10, T]`.
    pub tail: f64,
    /// Last value, used as the limit estimate.
    pub limit_estimate: f64,
    /// Whether the sequence never increases over the window.
    pub nonincreasing: bool,
}

impl TailSummary {
    /// Tail below `tol` and limit estimate above `floor`.
    pub fn is_stable(&self, tol: f64, floor: f64) -> bool {
        self.tail < tol && self.limit_estimate > floor
    }
}

/// Summarises `(t, value)` pairs sorted by `t`.
pub fn tail_summary(seq: &[(u64, f64)]) -> Option<TailSummary> {
    let &(t_last, last) = seq.last()?;
    let window: Vec<f64> = seq.iter().filter(|(t, _)| *t * 10 >= t_last).map(|&(_, v)| v).collect();
    let max = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = window.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(TailSummary { tail: max - min, limit_estimate: last, nonincreasing: window.windows(2).all(|w| w[1] <= w[0]) })
}
