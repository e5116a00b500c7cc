//! Edge-pruning stabilization.
//!
//! [`stabilize`] asks the oracle for an unstable closed walk, removes the
//! walk edge whose removal keeps the largest Perron root, and repeats until
//! the oracle certifies the system. [`stabilize_impl`] first clears all
//! short unstable walks in batch, preferring edges that lie on many of them.
//! [`optimal_stabilize`] searches every hitting set of the collected
//! unstable words for the one of largest entropy.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::automaton::{entropy_bits, Automaton, AutomatonError, Cycle, Edge, NodeId, Symbol, Word};
use crate::budget::Budget;
use crate::css::{Certificate, Css, CssError};
use crate::oracle::{oracle, short_cycle_sweep, OracleConfig, OracleVerdict, UnstableCycle};

/// Relative tolerance under which two Perron roots count as equal.
pub const ROOT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum StabilizeError {
    #[error("oracle could not decide stability: {reason}")]
    OracleUnknown {
        reason: String,
        trace: Box<StabilizationTrace>,
    },
    #[error("cycle {0} is not a closed walk of the automaton")]
    CycleNotRealizable(Word),
    #[error("optimal search exceeded its budget of {limit} states")]
    SearchBudget { limit: u64 },
    #[error("oracle returned word {0} although every strategy already forbids it")]
    Stalled(Word),
    #[error(transparent)]
    Css(#[from] CssError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// Edge identified by node names, stable across trimming.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NamedEdge {
    pub src: String,
    pub dst: String,
    pub label: Symbol,
}

impl NamedEdge {
    pub fn of(g: &Automaton, e: &Edge) -> Self {
        NamedEdge {
            src: g.name(e.src).to_string(),
            dst: g.name(e.dst).to_string(),
            label: e.label,
        }
    }

    pub fn resolve(&self, g: &Automaton) -> Option<Edge> {
        g.find_named_edge(&self.src, &self.dst, self.label)
    }
}

impl std::fmt::Display for NamedEdge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} -{}-> {}", self.src, self.label, self.dst)
    }
}

/// Closed walk recorded by node names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracedCycle {
    pub word: Word,
    pub nodes: Vec<String>,
    pub growth: f64,
}

impl TracedCycle {
    fn of(g: &Automaton, c: &Cycle, growth: f64) -> Self {
        TracedCycle {
            word: c.word.clone(),
            nodes: c.nodes.iter().map(|v| g.name(*v).to_string()).collect(),
            growth,
        }
    }

    /// The walk in `g`, if every edge survives there.
    pub fn resolve(&self, g: &Automaton) -> Option<Cycle> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| g.node_index(n))
            .collect::<Option<Vec<_>>>()?;
        let c = Cycle {
            word: self.word.clone(),
            nodes,
        };
        g.realizes(&c).then_some(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateEdge {
    pub edge: NamedEdge,
    pub perron_root: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepPhase {
    ShortCycleBatch,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationStep {
    pub phase: StepPhase,
    pub verdict: &'static str,
    pub cycle: TracedCycle,
    /// Distinct unstable short walks through the removed edge (batch phase),
    /// 1 for oracle steps.
    pub covered: usize,
    pub candidates: Vec<CandidateEdge>,
    pub removed: NamedEdge,
    pub perron_root: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilizationTrace {
    pub initial_perron_root: f64,
    pub initial_entropy: f64,
    pub steps: Vec<StabilizationStep>,
    pub removed_cycles: Vec<TracedCycle>,
    pub certificate: Option<Certificate>,
    pub oracle_calls: usize,
    pub final_perron_root: f64,
    pub final_entropy: f64,
    #[serde(skip)]
    pub final_css: Css,
}

impl StabilizationTrace {
    fn start(s: &Css) -> Self {
        let root = s.graph().perron_root();
        StabilizationTrace {
            initial_perron_root: root,
            initial_entropy: entropy_bits(root),
            steps: Vec::new(),
            removed_cycles: Vec::new(),
            certificate: None,
            oracle_calls: 0,
            final_perron_root: root,
            final_entropy: entropy_bits(root),
            final_css: s.clone(),
        }
    }

    fn set_current(&mut self, css: Css) {
        self.final_perron_root = css.graph().perron_root();
        self.final_entropy = entropy_bits(self.final_perron_root);
        self.final_css = css;
    }

    /// Edges removed explicitly, in order.
    pub fn removed_edges(&self) -> Vec<&NamedEdge> {
        self.steps.iter().map(|s| &s.removed).collect()
    }
}

fn is_tie(a: f64, best: f64) -> bool {
    a >= best - ROOT_TIE_TOLERANCE * best.max(1.0)
}

/// Evaluates every candidate and returns the index of the winner: largest
/// Perron root of `g - e`, ties resolved by the earliest candidate.
fn rank(g: &Automaton, edges: &[Edge]) -> Result<(usize, Vec<CandidateEdge>), StabilizeError> {
    let mut out = Vec::with_capacity(edges.len());
    for e in edges {
        let root = g.remove_edge(e)?.perron_root();
        out.push(CandidateEdge {
            edge: NamedEdge::of(g, e),
            perron_root: root,
            entropy: entropy_bits(root),
        });
    }
    let best = out.iter().map(|c| c.perron_root).fold(f64::NEG_INFINITY, f64::max);
    let idx = out.iter().position(|c| is_tie(c.perron_root, best)).unwrap_or(0);
    Ok((idx, out))
}

fn cycle_candidates(g: &Automaton, c: &Cycle) -> Result<Vec<Edge>, StabilizeError> {
    if !g.realizes(c) {
        return Err(StabilizeError::CycleNotRealizable(c.word.clone()));
    }
    let set: BTreeSet<Edge> = c.edges().into_iter().collect();
    Ok(set.into_iter().collect())
}

/// Edge of `c` whose removal leaves the largest entropy; ties go to the
/// least edge in `(src, dst, label)` order.
pub fn choose_edge(s: &Css, c: &Cycle) -> Result<Edge, StabilizeError> {
    let g = s.graph();
    let edges = cycle_candidates(g, c)?;
    let (i, _) = rank(g, &edges)?;
    Ok(edges[i])
}

/// Removes one edge per unstable oracle walk until the oracle certifies the
/// system. At most `|E|` edges are removed.
pub fn stabilize(s: &Css, cfg: &OracleConfig) -> Result<StabilizationTrace, StabilizeError> {
    let mut trace = StabilizationTrace::start(s);
    oracle_loop(s.clone(), cfg, &mut trace)?;
    Ok(trace)
}

/// Batch removal over all unstable walks of length up to
/// `cfg.short_cycle_len`, then the oracle loop of [`stabilize`].
pub fn stabilize_impl(s: &Css, cfg: &OracleConfig) -> Result<StabilizationTrace, StabilizeError> {
    let mut trace = StabilizationTrace::start(s);
    let mut css = s.clone();
    loop {
        let mut budget = Budget::new(cfg.budget);
        let found = match short_cycle_sweep(&css, cfg.short_cycle_len, cfg.epsilon, &mut budget) {
            Ok(f) => f,
            // Too many short walks to list; leave them to the oracle.
            Err(CssError::Budget(_)) => break,
            Err(e) => return Err(e.into()),
        };
        if found.is_empty() {
            break;
        }
        css = batch_step(&css, found, &mut trace)?;
    }
    trace.set_current(css.clone());
    oracle_loop(css, cfg, &mut trace)?;
    Ok(trace)
}

fn batch_step(css: &Css, found: Vec<UnstableCycle>, trace: &mut StabilizationTrace) -> Result<Css, StabilizeError> {
    let g = css.graph();
    // Distinct closed walks, best growth first (sweep order).
    let mut seen = BTreeSet::new();
    let walks: Vec<UnstableCycle> = found
        .into_iter()
        .filter(|u| seen.insert(u.cycle.canonical_edges()))
        .collect();
    let mut coverage: BTreeMap<Edge, usize> = BTreeMap::new();
    for u in &walks {
        let edges: BTreeSet<Edge> = u.cycle.edges().into_iter().collect();
        for e in edges {
            *coverage.entry(e).or_default() += 1;
        }
    }
    let top = coverage.values().copied().max().unwrap_or(0);
    let candidates: Vec<Edge> = coverage
        .iter()
        .filter(|(_, c)| **c == top)
        .map(|(e, _)| *e)
        .collect();
    let (i, ranked) = rank(g, &candidates)?;
    let edge = candidates[i];
    let hit: Vec<&UnstableCycle> = walks.iter().filter(|u| u.cycle.edges().contains(&edge)).collect();
    let first = hit[0];
    for u in &hit {
        trace.removed_cycles.push(TracedCycle::of(g, &u.cycle, u.growth));
    }
    let next = css.with_graph(g.remove_edge(&edge)?)?;
    let root = next.graph().perron_root();
    trace.steps.push(StabilizationStep {
        phase: StepPhase::ShortCycleBatch,
        verdict: "unstable_cycle",
        cycle: TracedCycle::of(g, &first.cycle, first.growth),
        covered: hit.len(),
        candidates: ranked,
        removed: NamedEdge::of(g, &edge),
        perron_root: root,
        entropy: entropy_bits(root),
    });
    Ok(next)
}

fn oracle_loop(mut css: Css, cfg: &OracleConfig, trace: &mut StabilizationTrace) -> Result<(), StabilizeError> {
    // Every step removes an edge, so the empty automaton (trivially stable)
    // is reached after at most |E| steps.
    for _ in 0..=css.graph().edge_count() {
        trace.oracle_calls += 1;
        match oracle(&css, cfg) {
            OracleVerdict::Stable { certificate } => {
                trace.certificate = Some(certificate);
                trace.set_current(css);
                return Ok(());
            }
            OracleVerdict::UnstableCycle { cycle, growth } => {
                let g = css.graph();
                let edges = cycle_candidates(g, &cycle)?;
                let (i, ranked) = rank(g, &edges)?;
                let edge = edges[i];
                let traced = TracedCycle::of(g, &cycle, growth);
                trace.removed_cycles.push(traced.clone());
                let next = css.with_graph(g.remove_edge(&edge)?)?;
                let root = next.graph().perron_root();
                trace.steps.push(StabilizationStep {
                    phase: StepPhase::Oracle,
                    verdict: "unstable_cycle",
                    cycle: traced,
                    covered: 1,
                    candidates: ranked,
                    removed: NamedEdge::of(g, &edge),
                    perron_root: root,
                    entropy: entropy_bits(root),
                });
                css = next;
            }
            OracleVerdict::Unknown { reason } => {
                trace.set_current(css);
                return Err(StabilizeError::OracleUnknown {
                    reason,
                    trace: Box::new(trace.clone()),
                });
            }
        }
    }
    unreachable!("the empty automaton is always certified")
}

#[derive(Debug, Clone)]
pub struct OptimalResult {
    pub css: Css,
    pub perron_root: f64,
    pub entropy: f64,
    /// Unstable words every admissible strategy must forbid.
    pub collected_cycles: Vec<Word>,
    pub certificate: Certificate,
    pub oracle_calls: usize,
    /// Hitting-set search states expanded over all rounds.
    pub search_states: u64,
    /// The greedy run seeding the search.
    pub greedy: StabilizationTrace,
}

/// Largest-entropy sub-automaton that forbids every collected unstable
/// word, re-checked by the oracle; new unstable words found by the oracle
/// are collected and the search repeats. The greedy result of
/// [`stabilize_impl`] seeds both the word collection and the incumbent, so
/// the answer is never worse than the greedy one.
pub fn optimal_stabilize(s: &Css, cfg: &OracleConfig) -> Result<OptimalResult, StabilizeError> {
    let greedy = stabilize_impl(s, cfg)?;
    let mut collected: Vec<Word> = Vec::new();
    for c in &greedy.removed_cycles {
        push_word(&mut collected, &c.word);
    }
    let mut oracle_calls = greedy.oracle_calls;
    let mut search = HittingSearch::new(s.graph());
    let mut budget = Budget::new(cfg.budget);

    let mut incumbent = greedy.final_css.clone();
    let mut incumbent_cert = greedy.certificate.clone().expect("greedy run ends certified");
    let mut incumbent_root = greedy.final_perron_root;
    loop {
        let found = search.run(&collected, incumbent_root, &mut budget)?;
        let Some(graph) = found else {
            break;
        };
        let css = s.with_graph(graph)?;
        oracle_calls += 1;
        match oracle(&css, cfg) {
            OracleVerdict::Stable { certificate } => {
                incumbent_root = css.graph().perron_root();
                incumbent = css;
                incumbent_cert = certificate;
            }
            OracleVerdict::UnstableCycle { cycle, .. } => {
                if !push_word(&mut collected, &cycle.word) {
                    return Err(StabilizeError::Stalled(cycle.word));
                }
            }
            OracleVerdict::Unknown { reason } => {
                let mut trace = greedy.clone();
                trace.set_current(css);
                trace.certificate = None;
                return Err(StabilizeError::OracleUnknown {
                    reason,
                    trace: Box::new(trace),
                });
            }
        }
    }
    Ok(OptimalResult {
        perron_root: incumbent_root,
        entropy: entropy_bits(incumbent_root),
        css: incumbent,
        collected_cycles: collected,
        certificate: incumbent_cert,
        oracle_calls,
        search_states: budget.used(),
        greedy,
    })
}

/// Adds the primitive root of `w` in rotation-canonical form; false if
/// already present.
fn push_word(words: &mut Vec<Word>, w: &Word) -> bool {
    let n = w.len();
    let p = (1..=n)
        .find(|p| n % p == 0 && (0..n).all(|i| w.symbols()[i] == w.symbols()[i % p]))
        .expect("non-empty word");
    let root = Word::new(w.symbols()[..p].to_vec());
    let rep = (0..p).map(|i| root.rotate(i)).min().expect("non-empty word");
    if words.contains(&rep) {
        return false;
    }
    words.push(rep);
    true
}

/// Branch and bound over edge subsets of a fixed base automaton. A state
/// keeps some edges alive and marks some as protected (never removed in
/// this branch). Subsets are explored canonically: for a witness walk with
/// free edges `e_1..e_r`, branch `i` removes `e_i` and protects
/// `e_1..e_{i-1}`, so every subset is reached at most once.
struct HittingSearch {
    names: Vec<String>,
    m: Symbol,
    edges: Vec<Edge>,
    index: BTreeMap<Edge, usize>,
}

struct Best {
    root: f64,
    alive: Option<Vec<bool>>,
}

impl HittingSearch {
    fn new(g: &Automaton) -> Self {
        let edges = g.edges().to_vec();
        let index = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        HittingSearch {
            names: g.names().to_vec(),
            m: g.m(),
            edges,
            index,
        }
    }

    fn graph(&self, alive: &[bool]) -> Automaton {
        let edges = self
            .edges
            .iter()
            .zip(alive)
            .filter(|(_, a)| **a)
            .map(|(e, _)| *e)
            .collect();
        Automaton::new(self.names.clone(), self.m, edges).expect("subset of a valid automaton")
    }

    /// Drops edges that cannot lie on a bi-infinite path.
    fn trim(&self, alive: &mut [bool]) {
        let n = self.names.len();
        loop {
            let mut ins = vec![0usize; n];
            let mut outs = vec![0usize; n];
            for (e, a) in self.edges.iter().zip(alive.iter()) {
                if *a {
                    outs[e.src] += 1;
                    ins[e.dst] += 1;
                }
            }
            let mut changed = false;
            for (e, a) in self.edges.iter().zip(alive.iter_mut()) {
                if *a && (ins[e.src] == 0 || outs[e.dst] == 0) {
                    *a = false;
                    changed = true;
                }
            }
            if !changed {
                return;
            }
        }
    }

    /// Best subset strictly above `floor` (up to tolerance), or `None`.
    fn run(&mut self, words: &[Word], floor: f64, budget: &mut Budget) -> Result<Option<Automaton>, StabilizeError> {
        let mut alive = vec![true; self.edges.len()];
        self.trim(&mut alive);
        let protected = vec![false; self.edges.len()];
        let mut best = Best { root: floor, alive: None };
        self.visit(words, alive, protected, &mut best, budget)?;
        Ok(best.alive.map(|a| self.graph(&a).validate_and_trim()))
    }

    fn visit(
        &self,
        words: &[Word],
        alive: Vec<bool>,
        protected: Vec<bool>,
        best: &mut Best,
        budget: &mut Budget,
    ) -> Result<(), StabilizeError> {
        budget
            .spend(1)
            .map_err(|e| StabilizeError::SearchBudget { limit: e.limit })?;
        if protected.iter().zip(&alive).any(|(p, a)| *p && !*a) {
            return Ok(());
        }
        let g = self.graph(&alive);
        let root = g.perron_root();
        // Removing edges never raises the Perron root.
        if root <= best.root + ROOT_TIE_TOLERANCE * best.root.max(1.0) {
            return Ok(());
        }
        // Branch on the most constrained accepted word.
        let mut branch: Option<Vec<usize>> = None;
        for w in words {
            let Some(walk) = periodic_witness(&g, w) else {
                continue;
            };
            let free: BTreeSet<usize> = walk
                .edges()
                .iter()
                .map(|e| self.index[e])
                .filter(|i| !protected[*i])
                .collect();
            if branch.as_ref().is_none_or(|b| free.len() < b.len()) {
                branch = Some(free.into_iter().collect());
            }
        }
        let Some(free) = branch else {
            best.root = root;
            best.alive = Some(alive);
            return Ok(());
        };
        for (i, &e) in free.iter().enumerate() {
            let mut a = alive.clone();
            a[e] = false;
            self.trim(&mut a);
            let mut p = protected.clone();
            for &q in &free[..i] {
                p[q] = true;
            }
            self.visit(words, a, p, best, budget)?;
        }
        Ok(())
    }
}

/// A closed walk labelled `w^j` for some `j ≥ 1`, if `w w w …` is accepted.
pub fn periodic_witness(g: &Automaton, w: &Word) -> Option<Cycle> {
    if !g.accepts_periodic(w) {
        return None;
    }
    let n = g.node_count();
    let succ: Vec<Vec<NodeId>> = (0..n).map(|u| g.read_from(u, w)).collect();
    // Shortest return path in the relation graph, smallest start first.
    for start in 0..n {
        let mut prev = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::from([start]);
        let mut reached = false;
        while let Some(u) = queue.pop_front() {
            for &v in &succ[u] {
                if v == start {
                    prev[start] = u;
                    reached = true;
                    break;
                }
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
            if reached {
                break;
            }
        }
        if !reached {
            continue;
        }
        let mut hops = vec![start];
        let mut v = prev[start];
        while v != start {
            hops.push(v);
            v = prev[v];
        }
        hops.push(start);
        hops.reverse();
        let mut nodes = vec![start];
        let mut word = Vec::new();
        for pair in hops.windows(2) {
            let seg = g.find_path(pair[0], w, pair[1])?;
            nodes.extend_from_slice(&seg[1..]);
            word.extend_from_slice(w.symbols());
        }
        return Some(Cycle {
            word: Word::new(word),
            nodes,
        });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn scalars(v: &[f64]) -> Vec<Matrix> {
        v.iter().map(|x| Matrix::scalar(*x)).collect()
    }

    fn fig4() -> Automaton {
        let names = ["v1", "v2", "v3"].iter().map(|s| s.to_string()).collect();
        let e = |s, d, l| Edge::new(s, d, l);
        Automaton::new(
            names,
            4,
            vec![e(0, 1, 2), e(1, 0, 1), e(1, 1, 2), e(1, 2, 3), e(2, 2, 3), e(2, 0, 4)],
        )
        .unwrap()
    }

    #[test]
    fn choose_edge_prefers_larger_remaining_entropy() {
        let s = Css::new(scalars(&[1.0, 1.0, 1.0, 1.0]), fig4()).unwrap();
        let c = s.graph().find_cycle(&"234".parse().unwrap()).unwrap();
        assert_eq!(choose_edge(&s, &c).unwrap(), Edge::new(1, 2, 3));
    }

    #[test]
    fn choose_edge_single_loop_and_ties() {
        let s = Css::unconstrained(scalars(&[2.0, 0.5])).unwrap();
        let c = s.graph().find_cycle(&"1".parse().unwrap()).unwrap();
        assert_eq!(choose_edge(&s, &c).unwrap(), Edge::new(0, 0, 1));

        // Two nodes swapping with labels 1 and 2: both removals kill all cycles.
        let g = Automaton::with_node_count(2, 2, vec![Edge::new(0, 1, 1), Edge::new(1, 0, 2)]).unwrap();
        let s = Css::new(scalars(&[2.0, 2.0]), g).unwrap();
        let c = s.graph().find_cycle(&"12".parse().unwrap()).unwrap();
        assert_eq!(choose_edge(&s, &c).unwrap(), Edge::new(0, 1, 1));

        let bogus = Cycle {
            word: "1".parse().unwrap(),
            nodes: vec![0, 0],
        };
        assert!(matches!(choose_edge(&s, &bogus), Err(StabilizeError::CycleNotRealizable(_))));
    }

    #[test]
    fn stabilize_removes_unstable_loop() {
        let s = Css::unconstrained(scalars(&[2.0, 0.5])).unwrap();
        let t = stabilize(&s, &OracleConfig::default()).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.steps[0].removed.label, 1);
        assert_eq!(t.final_entropy, 0.0);
        assert!((t.final_perron_root - 1.0).abs() < 1e-12);
        assert!(t.certificate.is_some());
        assert_eq!(t.oracle_calls, 2);
    }

    #[test]
    fn stable_system_is_untouched() {
        let s = Css::unconstrained(scalars(&[0.5, 0.25])).unwrap();
        for t in [
            stabilize(&s, &OracleConfig::default()).unwrap(),
            stabilize_impl(&s, &OracleConfig::default()).unwrap(),
        ] {
            assert!(t.steps.is_empty());
            assert_eq!(t.final_css, s);
            assert!((t.final_entropy - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_removal_kills_walks_sharing_an_edge() {
        // Walks 12 (0->1->0) and 13 (0->2->0) both use the label-1 loop
        // entering from node 0? They share edge (0,0,4) below.
        let e = Edge::new;
        let g = Automaton::with_node_count(
            3,
            4,
            vec![e(0, 0, 4), e(0, 1, 1), e(1, 0, 2), e(0, 2, 1), e(2, 0, 3)],
        )
        .unwrap();
        // Mode 4 expands, the others contract: 4 on its own is unstable and
        // so are 412 and 413.
        let s = Css::new(scalars(&[0.9, 0.9, 0.9, 3.0]), g).unwrap();
        let cfg = OracleConfig::default();
        let t = stabilize_impl(&s, &cfg).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.steps[0].phase, StepPhase::ShortCycleBatch);
        assert_eq!(t.steps[0].removed.label, 4);
        assert!(t.steps[0].covered >= 3);
        assert!(t.certificate.is_some());
    }

    #[test]
    fn unknown_verdict_is_an_error_with_trace() {
        let s = Css::unconstrained(scalars(&[2.0, 0.5])).unwrap();
        let cfg = OracleConfig {
            budget: 0,
            walk_budget: 0,
            ..OracleConfig::default()
        };
        match stabilize(&s, &cfg) {
            Err(StabilizeError::OracleUnknown { trace, .. }) => {
                assert_eq!(trace.oracle_calls, 1);
                assert!(trace.certificate.is_none());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn periodic_witness_reads_a_power() {
        // Reading "1" alternates between the two nodes, so the witness of
        // word 1 is the closed walk 11.
        let g = Automaton::with_node_count(2, 1, vec![Edge::new(0, 1, 1), Edge::new(1, 0, 1)]).unwrap();
        let w = periodic_witness(&g, &"1".parse().unwrap()).unwrap();
        assert_eq!(w.word.to_string(), "11");
        assert!(g.realizes(&w));
        let h = Automaton::with_node_count(2, 2, vec![Edge::new(0, 1, 1), Edge::new(1, 1, 2)]).unwrap();
        assert!(periodic_witness(&h, &"1".parse().unwrap()).is_none());
    }

    #[test]
    fn optimal_beats_greedy_on_three_nodes() {
        // Found by comparing both procedures on random scalar instances.
        let e = Edge::new;
        let g = Automaton::with_node_count(
            3,
            3,
            vec![
                e(0, 0, 1),
                e(0, 0, 2),
                e(0, 1, 1),
                e(0, 1, 3),
                e(0, 2, 2),
                e(0, 2, 3),
                e(1, 0, 2),
                e(1, 0, 3),
                e(1, 1, 2),
                e(1, 2, 2),
                e(2, 1, 1),
                e(2, 2, 2),
            ],
        )
        .unwrap();
        let s = Css::new(scalars(&[1.3, 1.3, 0.8]), g).unwrap();
        let cfg = OracleConfig::default();
        let greedy = stabilize(&s, &cfg).unwrap();
        let opt = optimal_stabilize(&s, &cfg).unwrap();
        assert_eq!(greedy.final_entropy, 0.0);
        // Plastic number: x^3 = x + 1.
        assert!((opt.perron_root - 1.324_717_957_244_746).abs() < 1e-9);
        assert!(opt.entropy > greedy.final_entropy);
        let mut b = Budget::default();
        assert!(opt.css.verify_certificate(&opt.certificate, &mut b).unwrap());
    }

    #[test]
    fn optimal_matches_greedy_on_single_loop() {
        let s = Css::unconstrained(scalars(&[2.0, 0.5])).unwrap();
        let opt = optimal_stabilize(&s, &OracleConfig::default()).unwrap();
        let greedy = stabilize(&s, &OracleConfig::default()).unwrap();
        assert_eq!(opt.css.graph().edges(), greedy.final_css.graph().edges());
        assert_eq!(opt.collected_cycles[0], "1".parse::<Word>().unwrap());
        assert!(!opt.collected_cycles.contains(&"11".parse::<Word>().unwrap()));
    }
}
