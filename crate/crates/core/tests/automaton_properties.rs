mod common;

use proptest::prelude::*;
use switchprune::automaton::entropy_bits;
use switchprune::io;
use switchprune::{Budget, Word};

fn words(g: &switchprune::Automaton, k: usize) -> Vec<Word> {
    g.words_k(k, &mut Budget::unlimited()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lifting_preserves_the_language(g in common::automaton(4, 3), k in 1usize..=2) {
        // Lifts are defined on valid automata, where every node lies on a
        // bi-infinite path.
        let g = g.validate_and_trim();
        let lifted = g.lift(k).unwrap();
        for i in 1..=5 {
            prop_assert_eq!(words(&g, i), words(&lifted, i));
        }
    }

    #[test]
    fn trimming_preserves_infinite_words(g in common::automaton(5, 2)) {
        let t = g.validate_and_trim();
        for i in 1..=5 {
            for w in words(&t, i) {
                prop_assert!(g.accepts(&w));
            }
        }
        prop_assert!((t.perron_root() - g.perron_root()).abs() < 1e-9);
    }

    #[test]
    fn edge_shift_has_the_same_perron_root(g in common::automaton(4, 2)) {
        let es = g.edge_shift();
        prop_assert!((es.perron_root() - g.perron_root()).abs() < 1e-7 * (1.0 + g.perron_root()));
    }

    #[test]
    fn core_keeps_the_perron_root(g in common::automaton(5, 2)) {
        prop_assert!((g.core().perron_root() - g.perron_root()).abs() < 1e-9 * (1.0 + g.perron_root()));
    }

    #[test]
    fn json_round_trip_is_identity(g in common::automaton(5, 3)) {
        let back = io::read_automaton(&io::write_automaton(&g)).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn word_counts_grow_at_the_entropy_rate(g in common::automaton(3, 2)) {
        let g = g.validate_and_trim();
        prop_assume!(!g.is_empty() && g.is_right_resolving() && g.is_irreducible());
        let mut b = Budget::unlimited();
        let n = g.count_words(24, &mut b).unwrap() as f64;
        let h = entropy_bits(g.perron_root());
        // For irreducible right-resolving graphs the count is Θ(λ^k).
        prop_assert!((n.log2() / 24.0 - h).abs() < 0.2, "counted {} vs entropy {}", n.log2() / 24.0, h);
    }
}
