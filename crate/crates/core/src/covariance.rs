//! Second-order statistics of the process: orthant layer covariances by
//! dynamic programming, half-space covariances in closed form, and the
//! generating polynomial of the critical two-dimensional orthant layer.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::combinatorics::{
    abelian_square_table, binomial, normalized_abelian_squares, shifted_autocorrelation,
    shifted_autocorrelation_normalized, BivariatePoly,
};
use crate::error::{Error, Result};
use crate::poset::{
    finite_layer_size, layer_vertices, parent_positions, pull_back, Caps, ModelKind, ModelSpec, Vertex,
};
use crate::scalar::{rat, rat_int, rational_to_f64, Scalar};

/// Covariances of the variables on one layer, in the lexicographic vertex
/// order, together with their covariances with the root.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerCovariance<S> {
    pub model: ModelSpec,
    pub t: u64,
    pub vertices: Vec<Vertex>,
    /// Row-major `n x n`.
    pub sigma: Vec<S>,
    /// `f[u] = Cov(X_u, X_0)`.
    pub f: Vec<S>,
}

impl<S: Scalar> LayerCovariance<S> {
    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &S {
        &self.sigma[i * self.n() + j]
    }

    /// Attempts a factorization; `Ok(())` iff `sigma` is positive definite.
    pub fn check_positive_definite(&self) -> Result<()> {
        S::solve_spd(&self.sigma, &self.f, self.n()).map(|_| ())
    }

    pub fn to_f64(&self) -> LayerCovariance<f64> {
        LayerCovariance {
            model: self.model.clone(),
            t: self.t,
            vertices: self.vertices.clone(),
            sigma: self.sigma.iter().map(S::to_float).collect(),
            f: self.f.iter().map(S::to_float).collect(),
        }
    }

    /// Restriction to the vertices at `keep` (positions into `vertices`).
    pub fn restrict(&self, keep: &[usize]) -> LayerCovariance<S> {
        let n = self.n();
        let mut sigma = Vec::with_capacity(keep.len() * keep.len());
        for &i in keep {
            for &j in keep {
                sigma.push(self.sigma[i * n + j].clone());
            }
        }
        LayerCovariance {
            model: self.model.clone(),
            t: self.t,
            vertices: keep.iter().map(|&i| self.vertices[i].clone()).collect(),
            sigma,
            f: keep.iter().map(|&i| self.f[i].clone()).collect(),
        }
    }
}

/// Iterator over the orthant layer covariances `t = 0, 1, 2, ...`. Only the
/// current layer is kept in memory.
pub struct FiniteLayers<S> {
    model: ModelSpec,
    caps: Caps,
    alphas: Vec<S>,
    eps_sq: S,
    current: Option<LayerCovariance<S>>,
    failed: bool,
}

impl<S: Scalar> FiniteLayers<S> {
    pub fn new(model: &ModelSpec, caps: Caps) -> Result<Self> {
        if model.kind() != ModelKind::FiniteOrthant {
            return Err(Error::Usage("layer dynamic program applies to the orthant model".into()));
        }
        let eps = S::from_rational(model.epsilon());
        Ok(FiniteLayers {
            model: model.clone(),
            caps,
            alphas: model.alphas().iter().map(S::from_rational).collect(),
            eps_sq: eps.clone() * eps,
            current: None,
            failed: false,
        })
    }

    fn step(&self, prev: &LayerCovariance<S>) -> Result<LayerCovariance<S>> {
        let t = prev.t + 1;
        self.caps.check_layer(finite_layer_size(self.model.d(), t))?;
        let vertices = layer_vertices(&self.model, t, None)?;
        let parents = parent_positions(&prev.vertices, &vertices);
        let n = vertices.len();
        let np = prev.n();
        let weights: Vec<S> = parents.iter().map(|p| self.alphas[p.len() - 1].clone()).collect();

        // tmp[u][v] = sum_{u' in p(v)} prev[u][u']
        let mut tmp: Vec<S> = Vec::with_capacity(np * n);
        for u in 0..np {
            let row = &prev.sigma[u * np..(u + 1) * np];
            for ps in &parents {
                let mut acc = row[ps[0]].clone();
                for &p in &ps[1..] {
                    acc = acc + row[p].clone();
                }
                tmp.push(acc);
            }
        }
        let mut sigma = vec![S::zero(); n * n];
        for v in 0..n {
            for w in v..n {
                let mut acc = tmp[parents[v][0] * n + w].clone();
                for &p in &parents[v][1..] {
                    acc = acc + tmp[p * n + w].clone();
                }
                let mut val = weights[v].clone() * weights[w].clone() * acc;
                if v == w {
                    let k = S::from_int(parents[v].len() as i64);
                    val = val + weights[v].clone() * weights[v].clone() * k * self.eps_sq.clone();
                }
                sigma[w * n + v] = val.clone();
                sigma[v * n + w] = val;
            }
        }
        let f = parents
            .iter()
            .zip(&weights)
            .map(|(ps, a)| {
                let mut acc = S::zero();
                for &p in ps {
                    acc = acc + prev.f[p].clone();
                }
                a.clone() * acc
            })
            .collect();
        Ok(LayerCovariance { model: self.model.clone(), t, vertices, sigma, f })
    }
}

impl<S: Scalar> Iterator for FiniteLayers<S> {
    type Item = Result<LayerCovariance<S>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let next = match &self.current {
            None => {
                let s0 = S::from_rational(self.model.sigma0_sq());
                Ok(LayerCovariance {
                    model: self.model.clone(),
                    t: 0,
                    vertices: vec![Vertex::origin(self.model.dim())],
                    sigma: vec![s0.clone()],
                    f: vec![s0],
                })
            }
            Some(prev) => self.step(prev),
        };
        match next {
            Ok(lc) => {
                self.current = Some(lc.clone());
                Some(Ok(lc))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Covariance data of orthant layer `t`.
pub fn finite_layer_covariance<S: Scalar>(m: &ModelSpec, t: u64, caps: &Caps) -> Result<LayerCovariance<S>> {
    caps.check_layer(finite_layer_size(m.d(), t))?;
    let mut layers = FiniteLayers::<S>::new(m, *caps)?;
    let mut last = None;
    for _ in 0..=t {
        last = Some(layers.next().expect("iterator is unbounded")?);
    }
    Ok(last.expect("at least one layer"))
}

/// `Cov(zeta, X_0)` and `Var(zeta)` of a linear combination.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationMoments<S> {
    pub cov: S,
    pub var: S,
}

impl<S: Scalar> CombinationMoments<S> {
    /// `cov^2 / var`.
    pub fn ratio_sq(&self) -> S {
        self.cov.clone() * self.cov.clone() / self.var.clone()
    }
}

/// Moments of `zeta = sum_u c_u X_u` over orthant layer `t` without forming
/// the layer covariance matrix: the coefficients are pushed down to every
/// vertex and each edge noise is counted once.
pub fn finite_combination_moments<S: Scalar>(
    m: &ModelSpec,
    t: u64,
    coeffs: &[S],
    caps: &Caps,
) -> Result<CombinationMoments<S>> {
    let layers = pull_back(m, t, coeffs, caps)?;
    let sigma0_sq = S::from_rational(m.sigma0_sq());
    let eps = S::from_rational(m.epsilon());
    let alphas: Vec<S> = m.alphas().iter().map(S::from_rational).collect();
    let a0 = layers[0].1[0].clone();
    let mut noise = S::zero();
    for (vertices, weights) in &layers[1..] {
        for (v, a) in vertices.iter().zip(weights) {
            if a.is_zero() {
                continue;
            }
            let k = m.parent_count(v);
            let alpha = alphas[k - 1].clone();
            noise = noise + S::from_int(k as i64) * alpha.clone() * alpha * a.clone() * a.clone();
        }
    }
    Ok(CombinationMoments {
        cov: sigma0_sq.clone() * a0.clone(),
        var: sigma0_sq * a0.clone() * a0 + eps.clone() * eps * noise,
    })
}

fn require_half_space(m: &ModelSpec) -> Result<()> {
    if m.kind() == ModelKind::HalfSpace {
        Ok(())
    } else {
        Err(Error::Usage("operation applies to the half-space model".into()))
    }
}

/// `(d + 1) alpha`, the growth factor of `Cov(X_v, X_0)` per layer.
pub fn halfspace_growth(m: &ModelSpec) -> BigRational {
    m.top_alpha() * rat_int(m.dim() as i64)
}

/// `Cov(X_v, X_0) = sigma0^2 ((d+1) alpha)^t` for any `v` on layer `t`.
pub fn halfspace_root_covariance(m: &ModelSpec, t: u64) -> Result<BigRational> {
    require_half_space(m)?;
    Ok(m.sigma0_sq() * num_traits::pow(halfspace_growth(m), t as usize))
}

/// `Cov(X_u, X_v)` for two vertices of half-space layer `t >= 0` with
/// `v - u = delta`. `delta = 0` gives the variance.
pub fn halfspace_pair_covariance(m: &ModelSpec, t: u64, delta: &Vertex) -> Result<BigRational> {
    require_half_space(m)?;
    check_delta(m, delta)?;
    let zero_delta = delta.0.iter().all(|&x| x == 0);
    if m.d() >= 3 && !zero_delta {
        return Err(Error::Unsupported(format!("pair covariances are implemented for d <= 2 (got d = {})", m.d())));
    }
    let inner: Vec<BigInt> = if zero_delta {
        abelian_square_table(t.saturating_sub(1) as usize, m.dim())?
    } else {
        (0..t as i64).map(|k| shifted_autocorrelation(k, &delta.0)).collect::<Result<_>>()?
    };
    Ok(halfspace_from_inner(m, t, &inner))
}

/// `Var(X_v)` for `v` on half-space layer `t`.
pub fn halfspace_vertex_variance(m: &ModelSpec, t: u64) -> Result<BigRational> {
    halfspace_pair_covariance(m, t, &Vertex::origin(m.dim()))
}

/// `Var(X_v)` on half-space layers `0..=t_max`, sharing one table of
/// abelian square counts.
pub fn halfspace_vertex_variances(m: &ModelSpec, t_max: u64) -> Result<Vec<BigRational>> {
    require_half_space(m)?;
    let table = abelian_square_table(t_max as usize, m.dim())?;
    let alpha_sq = m.top_alpha() * m.top_alpha();
    let beta_sq = halfspace_growth(m).pow(2);
    let noise = m.epsilon() * m.epsilon() * rat_int(m.dim() as i64) * &alpha_sq;
    let mut signal = m.sigma0_sq().clone();
    let mut sum = BigRational::zero();
    let mut pow = BigRational::one();
    let mut out = Vec::with_capacity(t_max as usize + 1);
    for k in 0..=t_max as usize {
        out.push(&signal + &noise * &sum);
        sum += &pow * BigRational::from_integer(table[k].clone());
        pow *= &alpha_sq;
        signal *= &beta_sq;
    }
    Ok(out)
}

fn halfspace_from_inner(m: &ModelSpec, t: u64, inner: &[BigInt]) -> BigRational {
    let alpha = m.top_alpha();
    let alpha_sq = alpha * alpha;
    let signal = m.sigma0_sq() * num_traits::pow(halfspace_growth(m), 2 * t as usize);
    let mut sum = BigRational::zero();
    let mut pow = BigRational::one();
    for k in 0..t as usize {
        sum += &pow * BigRational::from_integer(inner[k].clone());
        pow *= &alpha_sq;
    }
    let eps_sq = m.epsilon() * m.epsilon();
    signal + eps_sq * rat_int(m.dim() as i64) * alpha_sq * sum
}

fn check_delta(m: &ModelSpec, delta: &Vertex) -> Result<()> {
    if delta.dim() != m.dim() || delta.layer() != 0 {
        return Err(Error::Domain(format!("offset {delta} must have {} coordinates summing to 0", m.dim())));
    }
    Ok(())
}

/// Floating-point half-space covariances divided by `sigma0^2 beta^{2t}`,
/// `beta = (d+1) alpha`, so that deep layers stay in range. Dividing the
/// root covariances by `sigma0 beta^t` alongside turns each of them into
/// `sigma0` and leaves `f' Sigma^-1 f` unchanged.
#[derive(Debug, Clone)]
pub struct HalfSpaceFloat {
    model: ModelSpec,
    ln_beta: f64,
    noise_factor: f64,
}

impl HalfSpaceFloat {
    pub fn new(m: &ModelSpec) -> Result<Self> {
        require_half_space(m)?;
        let alpha = rational_to_f64(m.top_alpha());
        let eps = rational_to_f64(m.epsilon());
        let s0 = rational_to_f64(m.sigma0_sq());
        Ok(HalfSpaceFloat {
            model: m.clone(),
            ln_beta: libm::log(rational_to_f64(&halfspace_growth(m))),
            noise_factor: eps * eps * m.dim() as f64 * alpha * alpha / s0,
        })
    }

    /// `Var(X_v) / (sigma0^2 beta^{2t})` for `t = 0..=t_max`, with
    /// `beta = (d+1) alpha`. The reciprocal is `corr(X_v, X_0)^2`.
    pub fn scaled_variances(&self, t_max: u64) -> Vec<f64> {
        let g = normalized_abelian_squares(self.model.dim(), t_max as usize);
        let b2inv = libm::exp(-2.0 * self.ln_beta);
        // r_t = sum_{k<t} beta^{2(k-t)} G(k),  r_{t+1} = beta^{-2} (r_t + G(t))
        let mut r = 0.0f64;
        let mut out = Vec::with_capacity(t_max as usize + 1);
        for t in 0..=t_max as usize {
            out.push(1.0 + self.noise_factor * r);
            r = b2inv * (r + g[t]);
        }
        out
    }

    /// `Cov(X_u, X_v) / (sigma0^2 beta^{2t})` for `v - u = delta` on layer `t`.
    pub fn scaled_pair_covariance(&self, t: u64, delta: &Vertex) -> Result<f64> {
        check_delta(&self.model, delta)?;
        if self.model.d() >= 3 && delta.0.iter().any(|&x| x != 0) {
            return Err(Error::Unsupported(format!(
                "pair covariances are implemented for d <= 2 (got d = {})",
                self.model.d()
            )));
        }
        let mut sum = 0.0;
        for k in 0..t as i64 {
            let a = shifted_autocorrelation_normalized(k, &delta.0)?;
            if a > 0.0 {
                sum += libm::exp(2.0 * (k as f64 - t as f64) * self.ln_beta) * a;
            }
        }
        Ok(1.0 + self.noise_factor * sum)
    }
}

/// The covariance generating polynomial
/// `Q_t(z, w) = sum_{i,j} Cov(X_{(i,t-i)}, X_{(j,t-j)}) z^i w^j`
/// of the critical orthant model with `d = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QPolynomial {
    pub t: u64,
    pub poly: BivariatePoly,
}

pub fn q_polynomial_from_dp(t: u64, caps: &Caps) -> Result<QPolynomial> {
    let lc = finite_layer_covariance::<BigRational>(&ModelSpec::finite_critical(1), t, caps)?;
    let n = lc.n();
    let mut poly = BivariatePoly::zero();
    // Vertex (i, t - i) sits at position i.
    for i in 0..n {
        for j in 0..n {
            poly.add_term(i as u32, j as u32, lc.sigma[i * n + j].clone());
        }
    }
    Ok(QPolynomial { t, poly })
}

/// `(1 - z)^2 (1 - w)^2 (1 - zw)`, the common denominator of the closed form.
pub fn q_denominator() -> BivariatePoly {
    let one = BivariatePoly::one();
    let z = BivariatePoly::z();
    let w = BivariatePoly::w();
    let a = &one - &z;
    let b = &one - &w;
    let c = &one - &(&z * &w);
    &(&(&a * &a) * &(&b * &b)) * &c
}

/// The closed form of `Q_t` multiplied through by [`q_denominator`].
pub fn q_polynomial_cleared(t: u64) -> BivariatePoly {
    let t32 = t as u32;
    let one = BivariatePoly::one();
    let z = BivariatePoly::z();
    let w = BivariatePoly::w();
    let zw = &z * &w;
    let c = |p: i64, q: i64| BivariatePoly::constant(rat(p, q));
    let half = c(1, 2);
    let omz = &one - &z;
    let omw = &one - &w;
    let omzw = &one - &zw;
    let tp1 = c(t as i64 + 1, 1);
    let zw_t1 = zw.pow(t32 + 1);
    let three = &(&omz * &omw) * &omzw;

    let mut acc = BivariatePoly::zero();
    let mut add = |p: BivariatePoly| acc = &acc + &p;
    // -2 zw (1-z)(1-zw) (z(1+w)/2)^t
    add(&(&(&c(-2, 1) * &zw) * &(&omz * &omzw)) * &(&(&z * &(&one + &w)) * &half).pow(t32));
    // -2 zw (1-w)(1-zw) ((1+z)w/2)^t
    add(&(&(&c(-2, 1) * &zw) * &(&omw * &omzw)) * &(&(&(&one + &z) * &w) * &half).pow(t32));
    // (t+1) (zw)^{t+1} (1-z)(1-w)(1-zw)
    add(&(&tp1 * &zw_t1) * &three);
    // (2 - 6zw + 2z^2 w + 2 z w^2) (zw)^{t+1}
    let poly4 = &(&(&c(2, 1) - &(&c(6, 1) * &zw)) + &(&c(2, 1) * &(&zw * &z))) + &(&c(2, 1) * &(&zw * &w));
    add(&poly4 * &zw_t1);
    // 2 z (1-w)(1-zw) ((1+z)/2)^t
    add(&(&(&c(2, 1) * &z) * &(&omw * &omzw)) * &(&(&one + &z) * &half).pow(t32));
    // 2 w (1-z)(1-zw) ((1+w)/2)^t
    add(&(&(&c(2, 1) * &w) * &(&omz * &omzw)) * &(&(&one + &w) * &half).pow(t32));
    // -z^{t+1} (1-z)(1-w)(1-zw) - w^{t+1} (1-z)(1-w)(1-zw)
    add(&(&-&z.pow(t32 + 1) - &w.pow(t32 + 1)) * &three);
    // (t+1)(1-z)(1-w)(1-zw)
    add(&tp1 * &three);
    // -2z - 2w + 6zw - 2 z^2 w^2
    add(&(&(&(&c(-2, 1) * &z) - &(&c(2, 1) * &w)) + &(&c(6, 1) * &zw)) - &(&c(2, 1) * &(&zw * &zw)));
    acc
}

/// Result of comparing the dynamic-programming `Q_t` with the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct QIdentityWitness {
    pub t: u64,
    /// `Q_t * denominator == cleared closed form` as exact polynomials.
    pub closed_form_holds: bool,
    /// Number of monomials where the two sides differ.
    pub mismatched_terms: usize,
    /// `[w^t]((1+w)^t Q_t) == A_t (1 + z + ... + z^t)`.
    pub row_sum_identity_holds: bool,
    pub a_t: BigRational,
}

/// `A_t = t 2^{-t} C(2t, t) + 2^t`.
pub fn a_t(t: u64) -> BigRational {
    let two_t = num_traits::pow(BigInt::from(2), t as usize);
    BigRational::new(BigInt::from(t) * binomial(2 * t as i64, t as i64), two_t.clone())
        + BigRational::from_integer(two_t)
}

pub fn q_polynomial_explicit_check(t: u64, caps: &Caps) -> Result<QIdentityWitness> {
    let q = q_polynomial_from_dp(t, caps)?;
    let lhs = &q.poly * &q_denominator();
    let rhs = q_polynomial_cleared(t);
    let diff = &lhs - &rhs;
    let one_plus_w = &BivariatePoly::one() + &BivariatePoly::w();
    let row = (&one_plus_w.pow(t as u32) * &q.poly).w_coefficient(t as u32);
    let a = a_t(t);
    let row_ok = row.len() == t as usize + 1 && row.iter().all(|c| *c == a);
    Ok(QIdentityWitness {
        t,
        closed_form_holds: diff.is_zero(),
        mismatched_terms: diff.len(),
        row_sum_identity_holds: row_ok,
        a_t: a,
    })
}
