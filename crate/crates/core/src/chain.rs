//! Hit probabilities of the random downward chain of the critical orthant.
//!
//! Start at `u` on layer `t` with probability `c_u` and repeatedly step to
//! a uniformly chosen parent until the root is reached. In the critical
//! model `P(w in chain | start u)` equals the path weight `p(w -> u)`.

use alloc::format;
use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::poset::{pull_back, Caps, ModelKind, ModelSpec, Vertex};

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDistribution {
    pub d: usize,
    pub t: u64,
    /// For each layer `0..=t`, the vertices and their hit probabilities.
    pub layers: Vec<(Vec<Vertex>, Vec<BigRational>)>,
}

impl ChainDistribution {
    pub fn hit(&self, v: &Vertex) -> BigRational {
        let k = v.layer();
        if k < 0 || k as u64 > self.t {
            return BigRational::zero();
        }
        let (vs, ps) = &self.layers[k as usize];
        vs.binary_search(v).map(|i| ps[i].clone()).unwrap_or_else(|_| BigRational::zero())
    }

    /// `sum_{w in L_k} P(w in chain)` for each layer `k`.
    pub fn layer_sums(&self) -> Vec<BigRational> {
        self.layers.iter().map(|(_, ps)| ps.iter().fold(BigRational::zero(), |a, b| a + b)).collect()
    }

    /// `(1 / (d+1)) sum_w P(w in chain)^2`, a lower bound for the variance
    /// of the matching estimator.
    pub fn variance_lower_bound(&self) -> BigRational {
        let mut acc = BigRational::zero();
        for (_, ps) in &self.layers {
            for p in ps {
                acc += p * p;
            }
        }
        acc / BigRational::from_integer((self.d as i64 + 1).into())
    }
}

/// Exact hit probabilities for start weights `c` (dense, in layer order).
pub fn chain_hit_probabilities(m: &ModelSpec, t: u64, c: &[BigRational], caps: &Caps) -> Result<ChainDistribution> {
    if m.kind() != ModelKind::FiniteOrthant || !m.is_critical() {
        return Err(Error::Precondition("chain probabilities need the critical orthant model".into()));
    }
    if c.iter().any(|x| x.is_negative()) {
        return Err(Error::Precondition("start weights must be nonnegative".into()));
    }
    let total = c.iter().fold(BigRational::zero(), |a, b| a + b);
    if !total.is_one() {
        return Err(Error::Precondition(format!("start weights must sum to 1, got {total}")));
    }
    let layers = pull_back(m, t, c, caps)?;
    Ok(ChainDistribution { d: m.d(), t, layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use alloc::vec;

    #[test]
    fn straight_descent() {
        let m = ModelSpec::finite_critical(2);
        let layer = crate::poset::layer_vertices(&m, 3, None).unwrap();
        let c: Vec<BigRational> = layer.iter().map(|v| if v.0 == [3, 0, 0] { rat(1, 1) } else { rat(0, 1) }).collect();
        let ch = chain_hit_probabilities(&m, 3, &c, &Caps::default()).unwrap();
        for k in 0..=3 {
            assert_eq!(ch.hit(&Vertex(vec![k, 0, 0])), rat(1, 1));
        }
    }

    #[test]
    fn uniform_start_on_layer_two() {
        let m = ModelSpec::finite_critical(1);
        let third = rat(1, 3);
        let ch = chain_hit_probabilities(&m, 2, &[third.clone(), third.clone(), third], &Caps::default()).unwrap();
        assert_eq!(ch.hit(&Vertex(vec![1, 0])), rat(1, 2));
        assert!(ch.layer_sums().iter().all(|s| s.is_one()));
        assert!(chain_hit_probabilities(&m, 2, &[rat(1, 2), rat(0, 1), rat(0, 1)], &Caps::default()).is_err());
    }
}
