use gridcast_core::chain::chain_hit_probabilities;
use gridcast_core::covariance::{finite_combination_moments, finite_layer_covariance, FiniteLayers};
use gridcast_core::estimator::{combination_moments, optimal_convex, optimal_linear};
use gridcast_core::poset::pull_back;
use gridcast_core::scalar::{rat, rat_int};
use gridcast_core::{BigRational, Caps, ModelSpec};
use num_traits::{One, Zero};
use proptest::prelude::*;

/// Alpha tuple for `d` with `alpha_i` in `(0, 1/i]` as `num / (i * den)`.
fn boxed_alphas(d: usize) -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec(1i64..=8, d + 1)
        .prop_map(|nums| nums.iter().enumerate().map(|(i, &n)| rat(n, 8 * (i as i64 + 1))).collect())
}

fn any_alphas(d: usize) -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec(1i64..=12, d + 1).prop_map(|nums| nums.iter().map(|&n| rat(n, 8)).collect())
}

fn weights(len: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-5i64..=5, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn no_combination_beats_the_optimum(d in 1usize..=2, t in 1u64..=5, alphas in any_alphas(2), raw in weights(21)) {
        let m = ModelSpec::finite(alphas[..=d].to_vec()).unwrap();
        let lc = finite_layer_covariance::<BigRational>(&m, t, &Caps::default()).unwrap();
        let best = optimal_linear(&lc).unwrap();
        let c: Vec<BigRational> = raw[..lc.n()].iter().map(|&x| rat_int(x)).collect();
        prop_assume!(c.iter().any(|x| !x.is_zero()));
        let (cov, var) = combination_moments(&lc, &c);
        prop_assert!(var > BigRational::zero());
        prop_assert!(&cov * &cov / var <= best.ratio_sq);
    }

    #[test]
    fn convex_optimum_is_between_single_vertices_and_unrestricted(d in 1usize..=2, t in 1u64..=6, alphas in any_alphas(2)) {
        let m = ModelSpec::finite(alphas[..=d].to_vec()).unwrap();
        let caps = Caps::default();
        let lc = finite_layer_covariance::<BigRational>(&m, t, &caps).unwrap();
        let free = optimal_linear(&lc).unwrap();
        let convex = optimal_convex(&lc, &caps).unwrap();
        prop_assert!(convex.ratio_sq <= free.ratio_sq);
        prop_assert!(convex.coefficients.iter().all(|(_, c)| *c > BigRational::zero()));
        prop_assert!(convex.certificate.unwrap().holds(0.0));
        for i in 0..lc.n() {
            prop_assert!(&lc.f[i] * &lc.f[i] / lc.entry(i, i) <= convex.ratio_sq);
        }
    }

    #[test]
    fn exact_and_float_backends_agree(d in 1usize..=2, alphas in any_alphas(2)) {
        let m = ModelSpec::finite(alphas[..=d].to_vec()).unwrap();
        let caps = Caps::default();
        let exact = FiniteLayers::<BigRational>::new(&m, caps).unwrap().take(9);
        let float = FiniteLayers::<f64>::new(&m, caps).unwrap().take(9);
        for (a, b) in exact.zip(float) {
            let a = optimal_linear(&a.unwrap()).unwrap().ratio();
            let b = optimal_linear(&b.unwrap()).unwrap().ratio();
            prop_assert!((a - b).abs() <= 1e-9 * a, "{a} vs {b}");
        }
    }

    #[test]
    fn backward_route_matches_layer_matrix(d in 1usize..=2, t in 0u64..=5, alphas in any_alphas(2), raw in weights(21)) {
        let m = ModelSpec::finite(alphas[..=d].to_vec()).unwrap().with_noise(rat(2, 3), rat(1, 1), rat(5, 4)).unwrap();
        let caps = Caps::default();
        let lc = finite_layer_covariance::<BigRational>(&m, t, &caps).unwrap();
        let c: Vec<BigRational> = raw[..lc.n()].iter().map(|&x| rat_int(x)).collect();
        let (cov, var) = combination_moments(&lc, &c);
        let back = finite_combination_moments(&m, t, &c, &caps).unwrap();
        prop_assert_eq!(back.cov, cov);
        prop_assert_eq!(back.var, var);
    }

    /// Descending from one vertex, the weight reaching any layer is at most
    /// one inside the box and exactly one at the critical point.
    #[test]
    fn downward_weight_per_layer(d in 1usize..=2, t in 1u64..=7, alphas in boxed_alphas(2), pick in 0usize..1000) {
        let m = ModelSpec::finite(alphas[..=d].to_vec()).unwrap();
        let caps = Caps::default();
        let n = finite_layer_covariance::<f64>(&m, t, &caps).unwrap().n();
        let mut top = vec![BigRational::zero(); n];
        top[pick % n] = BigRational::one();
        let critical = ModelSpec::finite_critical(d);
        for model in [&m, &critical] {
            let layers = pull_back(model, t, &top, &caps).unwrap();
            for (_, ws) in &layers {
                let s = ws.iter().fold(BigRational::zero(), |a, b| a + b);
                if model.is_critical() {
                    prop_assert!(s.is_one());
                } else {
                    prop_assert!(s <= BigRational::one());
                }
            }
        }
    }

    #[test]
    fn chain_visits_one_vertex_per_layer(d in 1usize..=2, t in 0u64..=8, raw in prop::collection::vec(0i64..=4, 45)) {
        let m = ModelSpec::finite_critical(d);
        let caps = Caps::default();
        let n = finite_layer_covariance::<f64>(&m, t, &caps).unwrap().n();
        let total: i64 = raw[..n].iter().sum();
        prop_assume!(total > 0);
        let c: Vec<BigRational> = raw[..n].iter().map(|&x| rat(x, total)).collect();
        let chain = chain_hit_probabilities(&m, t, &c, &caps).unwrap();
        prop_assert!(chain.layer_sums().iter().all(|s| s.is_one()));
        prop_assert!(chain.hit(&gridcast_core::Vertex::origin(d + 1)).is_one());
        let (cov, var) = combination_moments(&finite_layer_covariance::<BigRational>(&m, t, &caps).unwrap(), &c);
        prop_assert!(cov.is_one());
        prop_assert!(var >= chain.variance_lower_bound());
    }
}
