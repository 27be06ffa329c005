use bellman_error::dist::{fit_mle, DistSpec, Family, SampleBatch};
use bellman_error::fit::{ks_statistic, KsMode};
use bellman_error::gumbel::kl_numeric;
use bellman_error::loss::softmax_policy;
use bellman_error::tabular::{make_random_dag, predict_gumbel};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Gumbel), Just(Family::Logistic), Just(Family::Normal)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ks_is_affine_invariant(fam in family(), seed in 0u64..1000, c in -50.0f64..50.0, k in 0.05f64..20.0) {
        let law = DistSpec::new(fam, 0.3, 1.7).unwrap();
        let data = law.sample(400, seed).unwrap();
        let moved = SampleBatch::from_values(data.values().iter().map(|x| k * x + c).collect()).unwrap();
        let moved_law = DistSpec::new(fam, k * 0.3 + c, k * 1.7).unwrap();
        for mode in [KsMode::TwoSided, KsMode::DataPoints] {
            let a = ks_statistic(&data, &law, mode);
            let b = ks_statistic(&moved, &moved_law, mode);
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn mle_is_location_scale_equivariant(fam in family(), seed in 0u64..1000, c in -20.0f64..20.0, k in 0.1f64..10.0) {
        let data = DistSpec::new(fam, 0.0, 1.0).unwrap().sample(300, seed).unwrap();
        let moved = SampleBatch::from_values(data.values().iter().map(|x| k * x + c).collect()).unwrap();
        let f0 = fit_mle(fam, &data).unwrap();
        let f1 = fit_mle(fam, &moved).unwrap();
        prop_assert!((f1.location() - (k * f0.location() + c)).abs() < 1e-6 * k.max(1.0));
        prop_assert!((f1.scale() / (k * f0.scale()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn kl_depends_on_location_over_scale(a in -20.0f64..20.0, b in 0.1f64..5.0, c in 0.1f64..10.0, gamma in 0.5f64..0.999) {
        let base = kl_numeric(a, b, gamma).unwrap();
        let scaled = kl_numeric(c * a, c * b, gamma).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-9 * base.abs().max(1.0));
    }

    #[test]
    fn softmax_ignores_a_constant_shift(q in prop::collection::vec(-5.0f64..5.0, 2..8), shift in -100.0f64..100.0, zeta in 0.1f64..5.0) {
        let mu = vec![1.0 / q.len() as f64; q.len()];
        let moved: Vec<f64> = q.iter().map(|x| x + shift).collect();
        let p = softmax_policy(&q, &mu, zeta).unwrap();
        let p2 = softmax_policy(&moved, &mu, zeta).unwrap();
        for (x, y) in p.iter().zip(&p2) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn predicted_scale_contracts_by_gamma(seed in 0u64..100, t in 1usize..8, beta1 in 0.1f64..4.0) {
        let mdp = make_random_dag(9, 3, 0.9, seed).unwrap();
        let p = predict_gumbel(&mdp, t, 0.0, beta1).unwrap();
        let mut expect = beta1;
        for _ in 1..t {
            expect *= 0.9;
        }
        prop_assert_eq!(p.beta_t, expect);
    }
}
