//! The two grid posets: the orthant `Z_+^{d+1}` and the half-space
//! `{x in Z^{d+1} : sum(x) >= 0}`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    FiniteOrthant,
    HalfSpace,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::FiniteOrthant => "finite",
            ModelKind::HalfSpace => "halfspace",
        }
    }
}

/// Parameters of a broadcast process. `alphas[i - 1]` is the weight used
/// for a vertex with `i` parents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    kind: ModelKind,
    d: usize,
    alphas: Vec<BigRational>,
    epsilon: BigRational,
    mu0: BigRational,
    sigma0_sq: BigRational,
}

impl ModelSpec {
    pub fn new(
        kind: ModelKind,
        d: usize,
        alphas: Vec<BigRational>,
        epsilon: BigRational,
        mu0: BigRational,
        sigma0_sq: BigRational,
    ) -> Result<Self> {
        if alphas.len() != d + 1 {
            return Err(Error::Domain(format!("expected {} weights for d = {d}, got {}", d + 1, alphas.len())));
        }
        if let Some(a) = alphas.iter().find(|a| !a.is_positive()) {
            return Err(Error::Domain(format!("weights must be positive, got {a}")));
        }
        if !epsilon.is_positive() {
            return Err(Error::Domain(format!("noise scale must be positive, got {epsilon}")));
        }
        if !sigma0_sq.is_positive() {
            return Err(Error::Domain(format!("root variance must be positive, got {sigma0_sq}")));
        }
        Ok(ModelSpec { kind, d, alphas, epsilon, mu0, sigma0_sq })
    }

    /// Orthant model with `epsilon = 1`, `mu0 = 0`, `sigma0^2 = 1`.
    pub fn finite(alphas: Vec<BigRational>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::Domain("at least one weight is required".into()));
        }
        let d = alphas.len() - 1;
        Self::new(ModelKind::FiniteOrthant, d, alphas, BigRational::one(), BigRational::zero(), BigRational::one())
    }

    /// Half-space model with weight `alpha` and unit noise and root variance.
    /// Only the weight for `d + 1` parents is ever used, so it fills every slot.
    pub fn half_space(d: usize, alpha: BigRational) -> Result<Self> {
        Self::new(
            ModelKind::HalfSpace,
            d,
            vec![alpha; d + 1],
            BigRational::one(),
            BigRational::zero(),
            BigRational::one(),
        )
    }

    /// Orthant model with `alpha_i = 1/i`.
    pub fn finite_critical(d: usize) -> Self {
        let alphas = (1..=d as i64 + 1).map(|i| BigRational::new(1.into(), i.into())).collect();
        Self::finite(alphas).expect("critical weights are valid")
    }

    /// Half-space model with `alpha = 1/(d+1)`.
    pub fn half_space_critical(d: usize) -> Self {
        Self::half_space(d, BigRational::new(1.into(), (d as i64 + 1).into())).expect("valid")
    }

    pub fn with_noise(mut self, epsilon: BigRational, mu0: BigRational, sigma0_sq: BigRational) -> Result<Self> {
        if !epsilon.is_positive() || !sigma0_sq.is_positive() {
            return Err(Error::Domain("noise scale and root variance must be positive".into()));
        }
        self.epsilon = epsilon;
        self.mu0 = mu0;
        self.sigma0_sq = sigma0_sq;
        Ok(self)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.d + 1
    }

    pub fn alphas(&self) -> &[BigRational] {
        &self.alphas
    }

    /// Weight applied at a vertex with `parents` parents (1-based).
    pub fn alpha(&self, parents: usize) -> &BigRational {
        &self.alphas[parents - 1]
    }

    /// The half-space weight, or `alpha_{d+1}` in the orthant.
    pub fn top_alpha(&self) -> &BigRational {
        &self.alphas[self.d]
    }

    pub fn epsilon(&self) -> &BigRational {
        &self.epsilon
    }

    pub fn mu0(&self) -> &BigRational {
        &self.mu0
    }

    pub fn sigma0_sq(&self) -> &BigRational {
        &self.sigma0_sq
    }

    pub fn is_normalized(&self) -> bool {
        self.epsilon.is_one() && self.mu0.is_zero() && self.sigma0_sq.is_one()
    }

    /// `alpha_i = 1/i` for every weight that matters in this model.
    pub fn is_critical(&self) -> bool {
        match self.kind {
            ModelKind::FiniteOrthant => {
                self.alphas.iter().enumerate().all(|(i, a)| *a == BigRational::new(1.into(), (i as i64 + 1).into()))
            }
            ModelKind::HalfSpace => *self.top_alpha() == BigRational::new(1.into(), (self.d as i64 + 1).into()),
        }
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        v.dim() == self.dim()
            && match self.kind {
                ModelKind::FiniteOrthant => v.0.iter().all(|&x| x >= 0),
                ModelKind::HalfSpace => v.layer() >= 0,
            }
    }

    fn check(&self, v: &Vertex) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::Domain(format!("vertex {v} is not in the {} poset with d = {}", self.kind.name(), self.d)))
        }
    }

    /// Number of parents of `v`. Rank-0 vertices have none.
    pub fn parent_count(&self, v: &Vertex) -> usize {
        if v.layer() == 0 {
            return 0;
        }
        match self.kind {
            ModelKind::FiniteOrthant => v.0.iter().filter(|&&x| x > 0).count(),
            ModelKind::HalfSpace => self.dim(),
        }
    }

    /// Weight of every edge into `v`, or `None` at rank 0.
    pub fn edge_weight(&self, v: &Vertex) -> Option<&BigRational> {
        match self.parent_count(v) {
            0 => None,
            k => Some(self.alpha(k)),
        }
    }

    /// Short human-readable identifier, e.g. `finite d=1 alpha=1,1/2`.
    pub fn label(&self) -> String {
        let alphas: Vec<String> = self.alphas.iter().map(crate::scalar::format_rational).collect();
        let mut s = format!("{} d={} alpha={}", self.kind.name(), self.d, alphas.join(","));
        if !self.is_normalized() {
            s.push_str(&format!(" eps={} mu0={} sigma0_sq={}", self.epsilon, self.mu0, self.sigma0_sq));
        }
        s
    }
}

/// A point of `Z^{d+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex(pub Vec<i64>);

impl Vertex {
    pub fn new(coords: Vec<i64>) -> Self {
        Vertex(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Vertex(vec![0; dim])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn layer(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn minus_unit(&self, i: usize) -> Vertex {
        let mut c = self.0.clone();
        c[i] -= 1;
        Vertex(c)
    }

    pub fn plus_unit(&self, i: usize) -> Vertex {
        let mut c = self.0.clone();
        c[i] += 1;
        Vertex(c)
    }

    pub fn sub(&self, other: &Vertex) -> Vertex {
        Vertex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Vertex) -> Vertex {
        Vertex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Vertex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Parses `(1,2,-3)` or `1,2,-3`.
    pub fn parse(s: &str) -> Result<Vertex> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let coords = inner
            .split(',')
            .map(|x| x.trim().parse::<i64>())
            .collect::<core::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Usage(format!("cannot parse vertex from {s:?}")))?;
        Ok(Vertex(coords))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(")")
    }
}

/// The box `prod [base_i, base_i + width)` intersected with the poset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Window {
    pub base: Vertex,
    pub width: u64,
}

impl Window {
    pub fn new(base: Vertex, width: u64) -> Result<Self> {
        if width == 0 {
            return Err(Error::Domain("window width must be positive".into()));
        }
        Ok(Window { base, width })
    }

    /// The width-`width` cube whose midpoint lies on layer `t` as close to
    /// the main diagonal as integer coordinates allow.
    pub fn centered(dim: usize, t: i64, width: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        let k = dim as i64;
        let total = t - (k * (width as i64 - 1)) / 2;
        let mut base = vec![total.div_euclid(k); dim];
        base[dim - 1] += total.rem_euclid(k);
        Window::new(Vertex(base), width)
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        v.0.iter().zip(&self.base.0).all(|(&x, &b)| x >= b && x < b + self.width as i64)
    }
}

/// Resource caps shared by the engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Maximum number of vertices on one layer.
    pub max_layer_size: usize,
    /// Maximum number of entries of one dense covariance matrix.
    pub max_matrix_entries: usize,
    /// Maximum number of vertices in a simulated dependency cone.
    pub max_cone_size: usize,
    /// Iteration budget for the active-set solver.
    pub max_iterations: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_layer_size: 50_000,
            max_matrix_entries: 25_000_000,
            max_cone_size: 10_000_000,
            max_iterations: 100_000,
        }
    }
}

impl Caps {
    pub fn check_layer(&self, n: u128) -> Result<()> {
        if n > self.max_layer_size as u128 {
            return Err(Error::Resource { what: "layer size", size: n, cap: self.max_layer_size as u128 });
        }
        if n * n > self.max_matrix_entries as u128 {
            return Err(Error::Resource {
                what: "covariance matrix entries",
                size: n * n,
                cap: self.max_matrix_entries as u128,
            });
        }
        Ok(())
    }
}

/// `C(n, k)` as `u128`, saturating on overflow.
pub(crate) fn binom_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Size of layer `t` of the orthant in dimension `d + 1`.
pub fn finite_layer_size(d: usize, t: u64) -> u128 {
    binom_u128(t + d as u64, d as u64)
}

/// The covering vertices below `v`, in lexicographic order.
pub fn parents(v: &Vertex, m: &ModelSpec) -> Result<Vec<Vertex>> {
    m.check(v)?;
    if v.layer() == 0 {
        return Ok(Vec::new());
    }
    Ok(match m.kind {
        ModelKind::FiniteOrthant => (0..v.dim()).filter(|&i| v.0[i] > 0).map(|i| v.minus_unit(i)).collect(),
        ModelKind::HalfSpace => (0..v.dim()).map(|i| v.minus_unit(i)).collect(),
    })
}

/// Vertices of layer `t`, lexicographically ordered. The half-space needs a
/// window because its layers are infinite; for the orthant the window is an
/// optional restriction.
pub fn layer_vertices(m: &ModelSpec, t: u64, bound: Option<&Window>) -> Result<Vec<Vertex>> {
    let dim = m.dim();
    let mut lo = vec![i64::MIN; dim];
    let mut hi = vec![i64::MAX; dim];
    match (m.kind, bound) {
        (ModelKind::HalfSpace, None) => {
            return Err(Error::Usage("half-space layers are infinite; a window is required".into()))
        }
        (_, Some(w)) => {
            if w.base.dim() != dim {
                return Err(Error::Usage(format!("window has dimension {}, model has {dim}", w.base.dim())));
            }
            for i in 0..dim {
                lo[i] = w.base.0[i];
                hi[i] = w.base.0[i] + w.width as i64 - 1;
            }
        }
        (ModelKind::FiniteOrthant, None) => {}
    }
    if m.kind == ModelKind::FiniteOrthant {
        for i in 0..dim {
            lo[i] = lo[i].max(0);
            hi[i] = hi[i].min(t as i64);
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0i64; dim];
    enumerate_sum(&lo, &hi, t as i64, 0, &mut cur, &mut out);
    Ok(out)
}

fn enumerate_sum(lo: &[i64], hi: &[i64], remaining: i64, i: usize, cur: &mut Vec<i64>, out: &mut Vec<Vertex>) {
    let dim = lo.len();
    if i + 1 == dim {
        if remaining >= lo[i] && remaining <= hi[i] {
            cur[i] = remaining;
            out.push(Vertex(cur.clone()));
        }
        return;
    }
    // Feasible range for coordinate i given the bounds on the rest.
    let rest_lo: i64 = lo[i + 1..].iter().fold(0i64, |a, &b| a.saturating_add(b));
    let rest_hi: i64 = hi[i + 1..].iter().fold(0i64, |a, &b| a.saturating_add(b));
    let from = lo[i].max(remaining.saturating_sub(rest_hi));
    let to = hi[i].min(remaining.saturating_sub(rest_lo));
    let mut x = from;
    while x <= to {
        cur[i] = x;
        enumerate_sum(lo, hi, remaining - x, i + 1, cur, out);
        x += 1;
    }
}

/// Weighted count of saturated chains from `u` up to `v`, each edge into a
/// vertex `w` weighted by `alpha_{|p(w)|}`.
pub fn path_weight_sum(u: &Vertex, v: &Vertex, m: &ModelSpec) -> Result<BigRational> {
    m.check(u)?;
    m.check(v)?;
    if !u.le(v) {
        return Ok(BigRational::zero());
    }
    let dim = m.dim();
    let extent: Vec<usize> = (0..dim).map(|i| (v.0[i] - u.0[i]) as usize + 1).collect();
    let mut stride = vec![1usize; dim];
    for i in (0..dim.saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * extent[i + 1];
    }
    let total = stride[0] * extent[0];
    let mut p = vec![BigRational::zero(); total];
    p[0] = BigRational::one();
    let mut offs = vec![0usize; dim];
    for idx in 1..total {
        // Advance the mixed-radix counter.
        let mut i = dim - 1;
        loop {
            offs[i] += 1;
            if offs[i] < extent[i] {
                break;
            }
            offs[i] = 0;
            i -= 1;
        }
        let w = Vertex((0..dim).map(|i| u.0[i] + offs[i] as i64).collect());
        let alpha = match m.edge_weight(&w) {
            Some(a) => a,
            None => continue,
        };
        let mut acc = BigRational::zero();
        for i in 0..dim {
            if offs[i] > 0 && (m.kind == ModelKind::HalfSpace || w.0[i] > 0) {
                acc += &p[idx - stride[i]];
            }
        }
        p[idx] = acc * alpha;
    }
    Ok(p.pop().unwrap_or_else(BigRational::one))
}

/// Index of `v` in a lexicographically sorted layer.
pub fn position(layer: &[Vertex], v: &Vertex) -> Option<usize> {
    layer.binary_search(v).ok()
}

/// For each vertex of an orthant layer, the positions of its parents in the
/// previous layer.
pub(crate) fn parent_positions(prev: &[Vertex], layer: &[Vertex]) -> Vec<Vec<usize>> {
    layer
        .iter()
        .map(|v| {
            (0..v.dim())
                .filter(|&i| v.0[i] > 0)
                .map(|i| position(prev, &v.minus_unit(i)).expect("parent lies on previous layer"))
                .collect()
        })
        .collect()
}

/// Propagates weights placed on orthant layer `t` down to every lower layer:
/// `a_w = sum_{v covers w} alpha_{|p(v)|} a_v`. Entry `k` of the result is
/// aligned with `layer_vertices(m, k, None)`.
///
/// With `a` on layer `t` equal to the coefficients of `zeta`, `a_w` is the
/// total weight with which the noise and signal entering at `w` reach
/// `zeta`.
pub fn pull_back<S: Scalar>(m: &ModelSpec, t: u64, top: &[S], caps: &Caps) -> Result<Vec<(Vec<Vertex>, Vec<S>)>> {
    if m.kind != ModelKind::FiniteOrthant {
        return Err(Error::Unsupported("backward weights are implemented for the orthant only".into()));
    }
    let n = finite_layer_size(m.d, t);
    if n > caps.max_layer_size as u128 {
        return Err(Error::Resource { what: "layer size", size: n, cap: caps.max_layer_size as u128 });
    }
    let alphas: Vec<S> = m.alphas.iter().map(S::from_rational).collect();
    let mut layers: Vec<(Vec<Vertex>, Vec<S>)> = Vec::with_capacity(t as usize + 1);
    let top_vertices = layer_vertices(m, t, None)?;
    if top.len() != top_vertices.len() {
        return Err(Error::Usage(format!(
            "expected {} coefficients on layer {t}, got {}",
            top_vertices.len(),
            top.len()
        )));
    }
    layers.push((top_vertices, top.to_vec()));
    for k in (0..t).rev() {
        let below = layer_vertices(m, k, None)?;
        let mut acc = vec![S::zero(); below.len()];
        let (above, weights) = layers.last().expect("nonempty");
        for (v, a) in above.iter().zip(weights) {
            if a.is_zero() {
                continue;
            }
            let np = m.parent_count(v);
            let contrib = alphas[np - 1].clone() * a.clone();
            for i in 0..v.dim() {
                if v.0[i] > 0 {
                    let pos = position(&below, &v.minus_unit(i)).expect("parent lies on layer below");
                    acc[pos] = acc[pos].clone() + contrib.clone();
                }
            }
        }
        layers.push((below, acc));
    }
    layers.reverse();
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn v(c: &[i64]) -> Vertex {
        Vertex(c.to_vec())
    }

    #[test]
    fn parents_in_both_models() {
        let f = ModelSpec::finite_critical(1);
        assert_eq!(parents(&v(&[1, 1]), &f).unwrap(), [v(&[0, 1]), v(&[1, 0])]);
        assert!(parents(&v(&[0, 0]), &f).unwrap().is_empty());
        assert!(parents(&v(&[-1, 2]), &f).is_err());
        let h = ModelSpec::half_space_critical(1);
        assert_eq!(parents(&v(&[2, -1]), &h).unwrap(), [v(&[1, -1]), v(&[2, -2])]);
    }

    #[test]
    fn layers_are_lexicographic() {
        let f = ModelSpec::finite_critical(1);
        assert_eq!(layer_vertices(&f, 2, None).unwrap(), [v(&[0, 2]), v(&[1, 1]), v(&[2, 0])]);
        assert_eq!(layer_vertices(&ModelSpec::finite_critical(2), 1, None).unwrap().len(), 3);
        let h = ModelSpec::half_space_critical(1);
        assert!(layer_vertices(&h, 3, None).is_err());
        let w = Window::new(v(&[0, 0]), 2).unwrap();
        assert!(layer_vertices(&h, 3, Some(&w)).unwrap().is_empty());
        assert_eq!(layer_vertices(&h, 1, Some(&w)).unwrap(), [v(&[0, 1]), v(&[1, 0])]);
    }

    #[test]
    fn path_weights_match_hand_values() {
        let f = ModelSpec::finite_critical(1);
        assert_eq!(path_weight_sum(&v(&[0, 0]), &v(&[1, 1]), &f).unwrap(), rat(1, 1));
        assert_eq!(path_weight_sum(&v(&[1, 1]), &v(&[1, 1]), &f).unwrap(), rat(1, 1));
        assert_eq!(path_weight_sum(&v(&[1, 0]), &v(&[0, 2]), &f).unwrap(), rat(0, 1));
        let h = ModelSpec::half_space(1, rat(1, 2)).unwrap();
        assert_eq!(path_weight_sum(&v(&[0, 0]), &v(&[1, 1]), &h).unwrap(), rat(1, 2));
    }

    #[test]
    fn centered_window_contains_diagonal() {
        let w = Window::centered(2, 100, 4).unwrap();
        assert_eq!(w.base, v(&[48, 49]));
        let h = ModelSpec::half_space_critical(1);
        let layer = layer_vertices(&h, 100, Some(&w)).unwrap();
        assert_eq!(layer.len(), 4);
        assert!(layer.contains(&v(&[50, 50])));
    }
}
