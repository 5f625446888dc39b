//! Explicit estimator with correlation bounded away from zero when some
//! weight satisfies `alpha_i > 1/i`.

use alloc::format;
use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::covariance::finite_combination_moments;
use crate::error::{Error, Result};
use crate::poset::{layer_vertices, Caps, ModelKind, ModelSpec};
use crate::scalar::{rat_int, rational_to_f64};

/// `kappa_i = (D-i)! prod_{j<i} (D alpha_D - j alpha_j) prod_{j>i} alpha_j`
/// for `i = 1..=D`, `D = d + 1`. With these weights
/// `Z_t = sum_{u in L_t} kappa_{|p(u)|} X_u` satisfies
/// `Z_{t+1} = D alpha_D Z_t + noise`.
pub fn kappa(alphas: &[BigRational]) -> Vec<BigRational> {
    let dd = alphas.len();
    let beta = &alphas[dd - 1] * rat_int(dd as i64);
    (1..=dd)
        .map(|i| {
            let mut k = BigRational::one();
            for f in 2..=(dd - i) {
                k *= rat_int(f as i64);
            }
            for j in 1..i {
                k *= &beta - &alphas[j - 1] * rat_int(j as i64);
            }
            for a in &alphas[i..] {
                k *= a;
            }
            k
        })
        .collect()
}

/// Exact evaluation of the normalised estimator `zeta_t = Z_t / beta^t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupercriticalCertificate {
    /// Number of leading coordinates the estimator lives on: the smallest
    /// `i` maximising `i alpha_i`. Vertices with a nonzero coordinate past
    /// this index get coefficient 0.
    pub embedding_dim: usize,
    pub kappa: Vec<BigRational>,
    /// `i alpha_i` at the embedding index.
    pub beta: BigRational,
    /// `Cov(zeta_t, X_0)` for `t = 1..=T`.
    pub covariances: Vec<BigRational>,
    /// `Var(zeta_t)` for `t = 1..=T`.
    pub variances: Vec<BigRational>,
    /// `Cov / sqrt(Var)` for `t = 1..=T`.
    pub ratios: Vec<f64>,
}

impl SupercriticalCertificate {
    pub fn covariance_constant(&self) -> bool {
        self.covariances.windows(2).all(|w| w[0] == w[1])
    }

    pub fn variance_nondecreasing(&self) -> bool {
        self.variances.windows(2).all(|w| w[0] <= w[1])
    }

    /// `Var(zeta_T) - Var(zeta_{T-1})`.
    pub fn variance_tail(&self) -> f64 {
        match self.variances.len() {
            0 | 1 => f64::INFINITY,
            n => rational_to_f64(&(&self.variances[n - 1] - &self.variances[n - 2])),
        }
    }

    pub fn ratio_floor(&self) -> f64 {
        self.ratios.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Builds and evaluates the estimator on orthant layers `1..=horizon`.
pub fn supercritical_certificate(m: &ModelSpec, horizon: u64, caps: &Caps) -> Result<SupercriticalCertificate> {
    if m.kind() != ModelKind::FiniteOrthant {
        return Err(Error::Precondition("the construction applies to the orthant model".into()));
    }
    let scaled: Vec<BigRational> = m.alphas().iter().enumerate().map(|(i, a)| a * rat_int(i as i64 + 1)).collect();
    let mut best = 0;
    for i in 1..scaled.len() {
        if scaled[i] > scaled[best] {
            best = i;
        }
    }
    if scaled[best] <= BigRational::one() {
        return Err(Error::Precondition(format!("no index with alpha_i > 1/i (max i*alpha_i = {})", scaled[best])));
    }
    let dim = best + 1;
    let sub_alphas = m.alphas()[..dim].to_vec();
    let sub = ModelSpec::new(
        ModelKind::FiniteOrthant,
        dim - 1,
        sub_alphas.clone(),
        m.epsilon().clone(),
        m.mu0().clone(),
        m.sigma0_sq().clone(),
    )?;
    let kappa = kappa(&sub_alphas);
    let beta = scaled[best].clone();
    let mut covariances = Vec::new();
    let mut variances = Vec::new();
    let mut ratios = Vec::new();
    let mut beta_t = BigRational::one();
    for t in 1..=horizon {
        beta_t *= &beta;
        let coeffs: Vec<BigRational> =
            layer_vertices(&sub, t, None)?.iter().map(|v| &kappa[sub.parent_count(v) - 1] / &beta_t).collect();
        let mom = finite_combination_moments(&sub, t, &coeffs, caps)?;
        if mom.var.is_zero() {
            return Err(Error::Internal("estimator has zero variance".into()));
        }
        ratios.push(rational_to_f64(&mom.cov) / libm::sqrt(rational_to_f64(&mom.var)));
        covariances.push(mom.cov);
        variances.push(mom.var);
    }
    Ok(SupercriticalCertificate { embedding_dim: dim, kappa, beta, covariances, variances, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn kappa_for_the_square() {
        assert_eq!(kappa(&[rat(1, 1), rat(3, 5)]), [rat(3, 5), rat(1, 5)]);
    }

    #[test]
    fn covariance_is_constant() {
        let m = ModelSpec::finite(alloc::vec![rat(1, 1), rat(3, 5)]).unwrap();
        let cert = supercritical_certificate(&m, 8, &Caps::default()).unwrap();
        assert!(cert.covariance_constant());
        assert!(cert.variance_nondecreasing());
        assert_eq!(cert.embedding_dim, 2);
        assert!(supercritical_certificate(&ModelSpec::finite_critical(1), 3, &Caps::default()).is_err());
    }

    #[test]
    fn embedding_picks_the_dominant_index() {
        // 1*alpha_1 = 3/2 beats 2*alpha_2 = 6/5.
        let m = ModelSpec::finite(alloc::vec![rat(3, 2), rat(3, 5)]).unwrap();
        let cert = supercritical_certificate(&m, 5, &Caps::default()).unwrap();
        assert_eq!(cert.embedding_dim, 1);
        assert!(cert.kappa.iter().all(|k| *k > BigRational::zero()));
    }
}
