#![allow(dead_code)]

use proptest::prelude::*;
use switchprune::{Automaton, Css, Edge, Matrix};

/// Automata with `1..=max_nodes` nodes over `1..=max_m` symbols, possibly
/// with dead ends and unreachable parts.
pub fn automaton(max_nodes: usize, max_m: u32) -> impl Strategy<Value = Automaton> {
    (1..=max_nodes, 1..=max_m).prop_flat_map(|(n, m)| {
        let edge = (0..n, 0..n, 1..=m);
        proptest::collection::vec(edge, 1..=(2 * n * m as usize).max(2)).prop_map(move |raw| {
            let mut edges: Vec<Edge> = raw.into_iter().map(|(s, d, a)| Edge::new(s, d, a)).collect();
            edges.sort();
            edges.dedup();
            Automaton::with_node_count(n, m, edges).expect("edges are in range")
        })
    })
}

pub fn matrix(n: usize, scale: f64) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-scale..scale, n * n).prop_map(move |d| Matrix::new(n, n, d).expect("n×n data"))
}

/// Constrained systems with 2×2 modes on trimmed, non-empty automata.
pub fn css(max_nodes: usize, max_m: u32, scale: f64) -> impl Strategy<Value = Css> {
    automaton(max_nodes, max_m)
        .prop_map(|g| g.validate_and_trim())
        .prop_filter("non-empty after trimming", |g| !g.is_empty())
        .prop_flat_map(move |g| {
            let m = g.m() as usize;
            proptest::collection::vec(matrix(2, scale), m)
                .prop_map(move |modes| Css::new(modes, g.clone()).expect("modes match the alphabet"))
        })
}
