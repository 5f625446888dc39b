//! Monte Carlo simulation of the process, used as an independent check of
//! the exact covariance engine.
//!
//! A [`SamplePlan`] fixes the finite set of vertices that influence the
//! observed ones (the whole lower part of the layer in the orthant, the
//! dependency cone of a window in the half-space). Every sample draws the
//! root and one noise per edge from its own Philox stream, so samples can
//! be generated in any order or in parallel with identical results.

mod rng;

pub use rng::{inverse_normal_cdf, philox4x32_10, GaussianMethod, NormalStream};

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;

use crate::covariance::{finite_layer_covariance, halfspace_pair_covariance, halfspace_root_covariance};
use crate::error::{Error, Result};
use crate::poset::{layer_vertices, parents, Caps, ModelKind, ModelSpec, Vertex, Window};
use crate::scalar::rational_to_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SimOptions {
    pub gaussian: GaussianMethod,
    /// Drop all edge noise. Only meant for testing degenerate behaviour.
    pub noiseless: bool,
}

#[derive(Debug, Clone)]
struct PlanLayer {
    /// `parent_start[i]..parent_start[i+1]` indexes `parent_pos`.
    parent_start: Vec<u32>,
    parent_pos: Vec<u32>,
    weight: Vec<f64>,
}

/// Precomputed propagation structure for one observation set.
#[derive(Debug, Clone)]
pub struct SamplePlan {
    model: ModelSpec,
    t: u64,
    window: Option<Window>,
    observed: Vec<Vertex>,
    layer0_size: usize,
    layers: Vec<PlanLayer>,
    mu0: f64,
    sigma0: f64,
    epsilon: f64,
    options: SimOptions,
    cone_size: usize,
}

impl SamplePlan {
    /// All of orthant layer `t`.
    pub fn finite(m: &ModelSpec, t: u64, caps: &Caps, options: SimOptions) -> Result<Self> {
        if m.kind() != ModelKind::FiniteOrthant {
            return Err(Error::Usage("expected the orthant model".into()));
        }
        let observed = layer_vertices(m, t, None)?;
        Self::build(m, t, None, observed, caps, options)
    }

    /// The slice of half-space layer `t` inside `w`, simulated over its
    /// exact dependency cone.
    pub fn half_space_window(m: &ModelSpec, w: &Window, t: u64, caps: &Caps, options: SimOptions) -> Result<Self> {
        if m.kind() != ModelKind::HalfSpace {
            return Err(Error::Usage("expected the half-space model".into()));
        }
        let observed = layer_vertices(m, t, Some(w))?;
        if observed.is_empty() {
            return Err(Error::Domain(format!("window with base {} misses layer {t}", w.base)));
        }
        Self::build(m, t, Some(w.clone()), observed, caps, options)
    }

    fn build(
        m: &ModelSpec,
        t: u64,
        window: Option<Window>,
        observed: Vec<Vertex>,
        caps: &Caps,
        options: SimOptions,
    ) -> Result<Self> {
        // Walk down from the observed set collecting every ancestor.
        let mut cone: Vec<Vec<Vertex>> = vec![observed.clone()];
        let mut total = observed.len();
        for _ in 0..t {
            let top = cone.last().expect("nonempty");
            let mut below = BTreeSet::new();
            for v in top {
                for p in parents(v, m)? {
                    below.insert(p);
                }
            }
            total += below.len();
            if total > caps.max_cone_size {
                return Err(Error::Resource {
                    what: "dependency cone size",
                    size: total as u128,
                    cap: caps.max_cone_size as u128,
                });
            }
            cone.push(below.into_iter().collect());
        }
        cone.reverse();
        let mut layers = Vec::with_capacity(t as usize);
        for k in 1..cone.len() {
            let (prev, cur) = (&cone[k - 1], &cone[k]);
            let mut parent_start = vec![0u32];
            let mut parent_pos = Vec::new();
            let mut weight = Vec::with_capacity(cur.len());
            for v in cur {
                for p in parents(v, m)? {
                    let pos = prev.binary_search(&p).map_err(|_| Error::Internal("cone is not closed".into()))?;
                    parent_pos.push(pos as u32);
                }
                parent_start.push(parent_pos.len() as u32);
                weight.push(rational_to_f64(m.alpha(m.parent_count(v))));
            }
            layers.push(PlanLayer { parent_start, parent_pos, weight });
        }
        Ok(SamplePlan {
            model: m.clone(),
            t,
            window,
            observed,
            layer0_size: cone[0].len(),
            layers,
            mu0: rational_to_f64(m.mu0()),
            sigma0: libm::sqrt(rational_to_f64(m.sigma0_sq())),
            epsilon: if options.noiseless { 0.0 } else { rational_to_f64(m.epsilon()) },
            options,
            cone_size: total,
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn window(&self) -> Option<&Window> {
        self.window.as_ref()
    }

    pub fn observed(&self) -> &[Vertex] {
        &self.observed
    }

    pub fn cone_size(&self) -> usize {
        self.cone_size
    }

    pub fn options(&self) -> SimOptions {
        self.options
    }

    /// Width of one output row: `X_0` followed by the observed vertices.
    pub fn row_len(&self) -> usize {
        1 + self.observed.len()
    }

    /// Writes `[X_0, X_v...]` of sample number `sample` into `out`.
    pub fn sample_into(&self, seed: u64, sample: u64, scratch: &mut Vec<f64>, out: &mut [f64]) {
        let mut rng = NormalStream::new(seed, sample, self.options.gaussian);
        let x0 = self.mu0 + self.sigma0 * rng.next_normal();
        let mut prev: Vec<f64> = vec![x0; self.layer0_size];
        for layer in &self.layers {
            scratch.clear();
            for (i, &alpha) in layer.weight.iter().enumerate() {
                let (a, b) = (layer.parent_start[i] as usize, layer.parent_start[i + 1] as usize);
                let mut acc = 0.0;
                for &p in &layer.parent_pos[a..b] {
                    acc += prev[p as usize] + self.epsilon * rng.next_normal();
                }
                scratch.push(alpha * acc);
            }
            core::mem::swap(&mut prev, scratch);
        }
        out[0] = x0;
        out[1..].copy_from_slice(&prev);
    }

    /// Streaming moments of samples `start..start + count`.
    pub fn moments(&self, seed: u64, start: u64, count: u64) -> Moments {
        let mut m = Moments::new(self.row_len());
        let mut row = vec![0.0; self.row_len()];
        let mut scratch = Vec::new();
        for s in start..start + count {
            self.sample_into(seed, s, &mut scratch, &mut row);
            m.push(&row);
        }
        m
    }

    /// Exact means and covariances of `[X_0, X_v...]`, the latter row-major.
    pub fn exact_moments(&self, caps: &Caps) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = self.row_len();
        let n = self.observed.len();
        let m = &self.model;
        let mut cov = vec![0.0; p * p];
        let mut mean = vec![0.0; p];
        let s0 = rational_to_f64(m.sigma0_sq());
        let mu0 = rational_to_f64(m.mu0());
        cov[0] = s0;
        mean[0] = mu0;
        match m.kind() {
            ModelKind::FiniteOrthant => {
                let lc = finite_layer_covariance::<BigRational>(m, self.t, caps)?;
                for i in 0..n {
                    let fi = rational_to_f64(&lc.f[i]);
                    cov[i + 1] = fi;
                    cov[(i + 1) * p] = fi;
                    // E[X_v] scales like Cov(X_v, X_0).
                    mean[i + 1] = mu0 * fi / s0;
                    for j in 0..n {
                        cov[(i + 1) * p + j + 1] = rational_to_f64(lc.entry(i, j));
                    }
                }
            }
            ModelKind::HalfSpace => {
                let f = rational_to_f64(&halfspace_root_covariance(m, self.t)?);
                for i in 0..n {
                    cov[i + 1] = f;
                    cov[(i + 1) * p] = f;
                    mean[i + 1] = mu0 * f / s0;
                    for j in i..n {
                        let c = rational_to_f64(&halfspace_pair_covariance(
                            m,
                            self.t,
                            &self.observed[j].sub(&self.observed[i]),
                        )?);
                        cov[(i + 1) * p + j + 1] = c;
                        cov[(j + 1) * p + i + 1] = c;
                    }
                }
            }
        }
        Ok((mean, cov))
    }
}

/// Reproducible batch of raw samples, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub model: ModelSpec,
    pub t: u64,
    pub seed: u64,
    pub n_samples: u64,
    pub vertices: Vec<Vertex>,
    pub x0: Vec<f64>,
    /// Row-major `n_samples x vertices.len()`.
    pub values: Vec<f64>,
}

impl SampleBatch {
    pub fn generate(plan: &SamplePlan, seed: u64, n_samples: u64) -> SampleBatch {
        let n = plan.observed.len();
        let mut x0 = Vec::with_capacity(n_samples as usize);
        let mut values = Vec::with_capacity(n_samples as usize * n);
        let mut row = vec![0.0; n + 1];
        let mut scratch = Vec::new();
        for s in 0..n_samples {
            plan.sample_into(seed, s, &mut scratch, &mut row);
            x0.push(row[0]);
            values.extend_from_slice(&row[1..]);
        }
        SampleBatch {
            model: plan.model.clone(),
            t: plan.t,
            seed,
            n_samples,
            vertices: plan.observed.clone(),
            x0,
            values,
        }
    }

    pub fn row(&self, s: usize) -> &[f64] {
        let n = self.vertices.len();
        &self.values[s * n..(s + 1) * n]
    }
}

/// Running means and co-moments (sums of centred products).
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: Vec<f64>,
    /// Row-major `p x p`; only the upper triangle is maintained.
    comoment: Vec<f64>,
    delta: Vec<f64>,
}

impl Moments {
    pub fn new(p: usize) -> Self {
        Moments { n: 0, mean: vec![0.0; p], comoment: vec![0.0; p * p], delta: vec![0.0; p] }
    }

    pub fn p(&self) -> usize {
        self.mean.len()
    }

    pub fn push(&mut self, x: &[f64]) {
        let p = self.p();
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        for i in 0..p {
            let d = x[i] - self.mean[i];
            self.delta[i] = d;
            self.mean[i] += d * inv;
        }
        for i in 0..p {
            let di = self.delta[i];
            let row = &mut self.comoment[i * p..(i + 1) * p];
            for j in i..p {
                row[j] += di * (x[j] - self.mean[j]);
            }
        }
    }

    /// Combines two disjoint groups. The result depends on the order of
    /// merging only through floating-point rounding, so callers that need
    /// bit-identical output merge in a fixed order.
    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let p = self.p();
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta: Vec<f64> = (0..p).map(|i| other.mean[i] - self.mean[i]).collect();
        for i in 0..p {
            for j in i..p {
                self.comoment[i * p + j] += other.comoment[i * p + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..p {
            self.mean[i] += delta[i] * nb / n;
        }
        self.n += other.n;
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.comoment[i * self.p() + j] / (self.n as f64 - 1.0)
    }
}

/// Agreement of empirical moments with exact values, in standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub moments_checked: usize,
    pub within_2se: usize,
    pub beyond_4se: usize,
    pub max_abs_z: f64,
}

/// Compares every mean and every covariance in the upper triangle. The
/// standard errors are those of Gaussian data with the exact covariance:
/// `sqrt(S_ii / n)` for means and `sqrt((S_ii S_jj + S_ij^2) / n)` for
/// covariances.
pub fn compare_moments(emp: &Moments, exact_mean: &[f64], exact_cov: &[f64]) -> OracleComparison {
    let p = emp.p();
    let n = emp.n as f64;
    let mut out = OracleComparison { moments_checked: 0, within_2se: 0, beyond_4se: 0, max_abs_z: 0.0 };
    let mut record = |z: f64| {
        let z = libm::fabs(z);
        out.moments_checked += 1;
        if z <= 2.0 {
            out.within_2se += 1;
        }
        if z > 4.0 {
            out.beyond_4se += 1;
        }
        out.max_abs_z = out.max_abs_z.max(z);
    };
    for i in 0..p {
        let se = libm::sqrt(exact_cov[i * p + i] / n);
        record((emp.mean[i] - exact_mean[i]) / se);
    }
    for i in 0..p {
        for j in i..p {
            let s = exact_cov[i * p + j];
            let se = libm::sqrt((exact_cov[i * p + i] * exact_cov[j * p + j] + s * s) / n);
            record((emp.covariance(i, j) - s) / se);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn batches_are_reproducible() {
        let m = ModelSpec::finite_critical(1);
        let plan = SamplePlan::finite(&m, 3, &Caps::default(), SimOptions::default()).unwrap();
        let a = SampleBatch::generate(&plan, 7, 50);
        let b = SampleBatch::generate(&plan, 7, 50);
        assert_eq!(a, b);
        let c = SampleBatch::generate(&plan, 8, 50);
        assert_ne!(a.x0, c.x0);
    }

    #[test]
    fn merged_moments_match_single_pass() {
        let m = ModelSpec::half_space(1, rat(1, 2)).unwrap();
        let w = Window::centered(2, 3, 2).unwrap();
        let plan = SamplePlan::half_space_window(&m, &w, 3, &Caps::default(), SimOptions::default()).unwrap();
        let whole = plan.moments(1, 0, 1000);
        let mut parts = plan.moments(1, 0, 300);
        parts.merge(&plan.moments(1, 300, 700));
        for i in 0..plan.row_len() {
            for j in 0..plan.row_len() {
                assert!((whole.covariance(i, j) - parts.covariance(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_samples_are_scaled_roots() {
        let m = ModelSpec::finite_critical(2);
        let opts = SimOptions { noiseless: true, ..SimOptions::default() };
        let plan = SamplePlan::finite(&m, 4, &Caps::default(), opts).unwrap();
        let batch = SampleBatch::generate(&plan, 3, 20);
        for s in 0..20 {
            for &x in batch.row(s) {
                assert!((x - batch.x0[s]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cone_cap_is_enforced() {
        let m = ModelSpec::half_space_critical(2);
        let w = Window::centered(3, 40, 1).unwrap();
        let caps = Caps { max_cone_size: 100, ..Caps::default() };
        assert!(matches!(
            SamplePlan::half_space_window(&m, &w, 40, &caps, SimOptions::default()),
            Err(Error::Resource { .. })
        ));
    }
}
