pub mod exact;
pub mod scan;
pub mod simulate;
pub mod verify;

use gridcast_core::covariance::LayerCovariance;
use gridcast_core::estimator::{
    optimal_convex, optimal_linear, window_covariance, window_covariance_f64, EstimatorResult, Mode,
};
use gridcast_core::scalar::format_rational;
use gridcast_core::{BigRational, Caps, ModelSpec, Scalar, Window};

use crate::error::CliError;

/// Text rendering of a scalar: `p/q` when exact, shortest scientific
/// notation otherwise.
pub trait Render {
    fn render(&self) -> String;
}

impl Render for f64 {
    fn render(&self) -> String {
        format!("{self:e}")
    }
}

impl Render for BigRational {
    fn render(&self) -> String {
        format_rational(self)
    }
}

/// Covariance data of a half-space window slice in the requested scalar.
pub fn window_layer<S: Scalar>(m: &ModelSpec, t: u64, w: &Window, caps: &Caps) -> Result<LayerCovariance<S>, CliError> {
    Ok(if S::EXACT {
        let lc = window_covariance(m, t, w, caps)?;
        LayerCovariance {
            model: lc.model,
            t,
            vertices: lc.vertices,
            sigma: lc.sigma.iter().map(S::from_rational).collect(),
            f: lc.f.iter().map(S::from_rational).collect(),
        }
    } else {
        let lc = window_covariance_f64(m, t, w, caps)?;
        LayerCovariance {
            model: lc.model,
            t,
            vertices: lc.vertices,
            sigma: lc.sigma.into_iter().map(S::from_f64).collect(),
            f: lc.f.into_iter().map(S::from_f64).collect(),
        }
    })
}

/// The best single variable of a layer.
pub fn best_single_vertex<S: Scalar>(lc: &LayerCovariance<S>) -> EstimatorResult<S> {
    let mut best: Option<(usize, S)> = None;
    for i in 0..lc.n() {
        let r = lc.f[i].clone() * lc.f[i].clone() / lc.entry(i, i).clone();
        if best.as_ref().map_or(true, |(_, b)| r > *b) {
            best = Some((i, r));
        }
    }
    let (i, ratio_sq) = best.expect("layers are nonempty");
    EstimatorResult {
        mode: Mode::SingleVertex,
        t: lc.t,
        coefficients: vec![(lc.vertices[i].clone(), S::one())],
        ratio_sq,
        certificate: None,
    }
}

/// Estimator over all of `lc` for a mode that does not change the support.
pub fn solve<S: Scalar>(lc: &LayerCovariance<S>, mode: Mode, caps: &Caps) -> Result<EstimatorResult<S>, CliError> {
    let mut res = match mode {
        Mode::Convex => optimal_convex(lc, caps)?,
        Mode::SingleVertex => best_single_vertex(lc),
        Mode::Unrestricted | Mode::Window(_) => optimal_linear(lc)?,
    };
    res.mode = mode;
    Ok(res)
}
