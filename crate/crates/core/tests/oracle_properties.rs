mod common;

use proptest::prelude::*;
use switchprune::css::ADMISSIBILITY_MARGIN;
use switchprune::{oracle, Budget, OracleConfig, OracleVerdict};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn verdicts_recheck(s in common::css(4, 3, 1.4), eps in 1e-6..0.2f64) {
        let cfg = OracleConfig { epsilon: eps, walk_budget: 20_000, ..OracleConfig::default() };
        match oracle(&s, &cfg) {
            OracleVerdict::Stable { certificate } => {
                prop_assert!(certificate.value < 1.0 - ADMISSIBILITY_MARGIN);
                prop_assert!(s.verify_certificate(&certificate, &mut Budget::unlimited()).unwrap());
            }
            OracleVerdict::UnstableCycle { cycle, growth } => {
                prop_assert!(s.graph().realizes(&cycle));
                let again = s.growth(&cycle.word).unwrap();
                prop_assert!((again - growth).abs() <= 1e-9 * (1.0 + growth));
                prop_assert!(again > 1.0 - eps);
            }
            OracleVerdict::Unknown { reason } => prop_assert!(!reason.is_empty()),
        }
    }

    #[test]
    fn same_seed_same_verdict(s in common::css(3, 2, 1.4), seed in 0u64..4) {
        let cfg = OracleConfig { seed, walk_budget: 5_000, ..OracleConfig::default() };
        prop_assert_eq!(oracle(&s, &cfg), oracle(&s, &cfg));
    }
}

#[test]
fn zero_budget_is_unknown() {
    let s = switchprune::Css::unconstrained(vec![switchprune::Matrix::scalar(2.0)]).unwrap();
    let cfg = OracleConfig { budget: 0, ..OracleConfig::default() };
    assert!(matches!(oracle(&s, &cfg), OracleVerdict::Unknown { .. }));
}
