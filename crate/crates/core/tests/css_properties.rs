mod common;

use proptest::prelude::*;
use switchprune::css::ADMISSIBILITY_MARGIN;
use switchprune::{Budget, MatrixNorm};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn branch_and_bound_matches_enumeration(s in common::css(3, 2, 1.5), k in 1usize..=5) {
        let norm = MatrixNorm::Spectral;
        let got = s.rho_hat_k(k, &norm, &mut Budget::unlimited()).unwrap();
        let brute = s
            .graph()
            .words_k(k, &mut Budget::unlimited())
            .unwrap()
            .iter()
            .map(|w| norm.eval(&s.product(w.symbols())))
            .fold(0.0, f64::max)
            .powf(1.0 / k as f64);
        prop_assert!((got - brute).abs() <= 1e-9 * (1.0 + brute), "{got} vs {brute}");
    }

    #[test]
    fn lower_bound_never_exceeds_upper_bound(s in common::css(3, 2, 1.5), k in 1usize..=4) {
        let mut b = Budget::unlimited();
        for norm in s.norm_candidates() {
            let r = s.bounds_k(k, &norm, &mut b).unwrap();
            prop_assert!(r.lower <= r.upper * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn certificates_verify_from_scratch(s in common::css(3, 2, 1.0)) {
        let mut b = Budget::unlimited();
        if let Some(cert) = s.certify_admissible(4, &s.norm_candidates(), &mut b).unwrap() {
            prop_assert!(cert.value < 1.0 - ADMISSIBILITY_MARGIN);
            prop_assert!(s.verify_certificate(&cert, &mut Budget::unlimited()).unwrap());
        }
    }

    #[test]
    fn node_norm_certificates_bound_every_path(s in common::css(3, 2, 1.0), k in 1usize..=4) {
        let core = s.core();
        prop_assume!(!core.graph().is_empty());
        if let Some(norm) = core.node_norm_candidate() {
            let bound = core.rho_hat_k(1, &norm, &mut Budget::unlimited()).unwrap();
            // Along any accepted path the product norm is at most bound^len,
            // and every closed walk's growth is at most the bound.
            let low = core.rho_lower_k(k, &mut Budget::unlimited()).unwrap();
            prop_assert!(low.value <= bound * (1.0 + 1e-9) + 1e-12);
        }
    }
}
